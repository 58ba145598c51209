#pragma once

// Small from-scratch neural stack for the pair models: linear layers, GELU,
// layer norm, inverted dropout, residual adapter blocks, an MLP head, the
// two task losses and AdamW. Everything is templated on the scalar type;
// the pipeline trains in float and the gradient checks run in double.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wic/data_model.hpp"
#include "wic/embedding_store.hpp"
#include "wic/error.hpp"
#include "wic/features.hpp"
#include "wic/metrics.hpp"
#include "wic/random.hpp"

namespace wic::nn {

using Eigen::Index;

template <typename Scalar>
struct Parameter {
  std::string name;
  Matrix<Scalar> value;
  Matrix<Scalar> grad;

  Parameter(std::string n, Index rows, Index cols)
      : name(std::move(n)), value(Matrix<Scalar>::Zero(rows, cols)), grad(Matrix<Scalar>::Zero(rows, cols)) {}
};

template <typename Scalar>
Scalar gelu(Scalar x) {
  return Scalar(0.5) * x * (Scalar(1) + std::erf(x / std::numbers::sqrt2_v<Scalar>));
}

template <typename Scalar>
Scalar gelu_derivative(Scalar x) {
  const Scalar cdf = Scalar(0.5) * (Scalar(1) + std::erf(x / std::numbers::sqrt2_v<Scalar>));
  const Scalar pdf = std::exp(Scalar(-0.5) * x * x) * std::numbers::inv_sqrtpi_v<Scalar> /
                     std::numbers::sqrt2_v<Scalar>;
  return cdf + x * pdf;
}

/// y = x W^T + b, rows are samples.
template <typename Scalar>
class Linear {
 public:
  Linear(const std::string& name, Index in, Index out)
      : weight(name + ".weight", out, in), bias(name + ".bias", 1, out) {}

  /// Uniform(-1/sqrt(in), 1/sqrt(in)) for weights and bias.
  void init_uniform(Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_features()));
    for (Index i = 0; i < weight.value.size(); ++i)
      weight.value.data()[i] = static_cast<Scalar>(rng.uniform(-bound, bound));
    for (Index i = 0; i < bias.value.size(); ++i)
      bias.value.data()[i] = static_cast<Scalar>(rng.uniform(-bound, bound));
  }

  void init_zero() {
    weight.value.setZero();
    bias.value.setZero();
  }

  Matrix<Scalar> forward(const Matrix<Scalar>& x) {
    if (x.cols() != in_features()) {
      throw ShapeError(weight.name + ": input width " + std::to_string(x.cols()) + ", expected " +
                       std::to_string(in_features()));
    }
    input_ = x;
    Matrix<Scalar> y = x * weight.value.transpose();
    y.rowwise() += bias.value.row(0);
    return y;
  }

  Matrix<Scalar> backward(const Matrix<Scalar>& dy) {
    weight.grad.noalias() += dy.transpose() * input_;
    bias.grad.row(0) += dy.colwise().sum();
    return dy * weight.value;
  }

  [[nodiscard]] Index in_features() const { return weight.value.cols(); }
  [[nodiscard]] Index out_features() const { return weight.value.rows(); }

  void collect(std::vector<Parameter<Scalar>*>& out) {
    out.push_back(&weight);
    out.push_back(&bias);
  }

  Parameter<Scalar> weight;
  Parameter<Scalar> bias;

 private:
  Matrix<Scalar> input_;
};

template <typename Scalar>
class Gelu {
 public:
  Matrix<Scalar> forward(const Matrix<Scalar>& x) {
    input_ = x;
    return x.unaryExpr([](Scalar v) { return gelu(v); });
  }
  Matrix<Scalar> backward(const Matrix<Scalar>& dy) const {
    return dy.cwiseProduct(input_.unaryExpr([](Scalar v) { return gelu_derivative(v); }));
  }

 private:
  Matrix<Scalar> input_;
};

/// Per-row normalization followed by an elementwise affine map.
template <typename Scalar>
class LayerNorm {
 public:
  LayerNorm(const std::string& name, Index width, double eps = 1e-5)
      : gamma(name + ".gamma", 1, width), beta(name + ".beta", 1, width), eps_(eps) {
    gamma.value.setOnes();
  }

  /// Normalized rows before the affine map (mean 0, variance var/(var+eps)).
  Matrix<Scalar> normalize(const Matrix<Scalar>& x) {
    if (x.cols() != gamma.value.cols()) throw ShapeError(gamma.name + ": width mismatch");
    const auto n = static_cast<Scalar>(x.cols());
    normalized_.resize(x.rows(), x.cols());
    inv_std_.resize(x.rows());
    for (Index r = 0; r < x.rows(); ++r) {
      const Scalar mean = x.row(r).sum() / n;
      const auto centered = (x.row(r).array() - mean).eval();
      const Scalar var = centered.square().sum() / n;
      inv_std_[r] = Scalar(1) / std::sqrt(var + static_cast<Scalar>(eps_));
      normalized_.row(r) = centered * inv_std_[r];
    }
    return normalized_;
  }

  Matrix<Scalar> forward(const Matrix<Scalar>& x) {
    normalize(x);
    Matrix<Scalar> y = normalized_.array().rowwise() * gamma.value.row(0).array();
    y.rowwise() += beta.value.row(0);
    return y;
  }

  Matrix<Scalar> backward(const Matrix<Scalar>& dy) {
    gamma.grad.row(0) += dy.cwiseProduct(normalized_).colwise().sum();
    beta.grad.row(0) += dy.colwise().sum();
    const Matrix<Scalar> dxhat = dy.array().rowwise() * gamma.value.row(0).array();
    const auto n = static_cast<Scalar>(dy.cols());
    Matrix<Scalar> dx(dy.rows(), dy.cols());
    for (Index r = 0; r < dy.rows(); ++r) {
      const Scalar mean_d = dxhat.row(r).sum() / n;
      const Scalar mean_dx = dxhat.row(r).cwiseProduct(normalized_.row(r)).sum() / n;
      dx.row(r) = inv_std_[r] *
                  (dxhat.row(r).array() - mean_d - normalized_.row(r).array() * mean_dx).matrix();
    }
    return dx;
  }

  void collect(std::vector<Parameter<Scalar>*>& out) {
    out.push_back(&gamma);
    out.push_back(&beta);
  }

  Parameter<Scalar> gamma;
  Parameter<Scalar> beta;

 private:
  double eps_;
  Matrix<Scalar> normalized_;
  Vector<Scalar> inv_std_;
};

/// Inverted dropout: survivors are scaled by 1/(1-p) in training mode.
template <typename Scalar>
class Dropout {
 public:
  explicit Dropout(double rate) : rate_(rate) {
    if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout rate must be in [0, 1)");
  }

  Matrix<Scalar> forward(const Matrix<Scalar>& x, bool training, Rng& rng) {
    active_ = training && rate_ > 0.0;
    if (!active_) return x;
    const auto keep = static_cast<Scalar>(1.0 / (1.0 - rate_));
    mask_.resize(x.rows(), x.cols());
    for (Index i = 0; i < mask_.size(); ++i)
      mask_.data()[i] = rng.uniform() < rate_ ? Scalar(0) : keep;
    return x.cwiseProduct(mask_);
  }

  Matrix<Scalar> backward(const Matrix<Scalar>& dy) const {
    return active_ ? Matrix<Scalar>(dy.cwiseProduct(mask_)) : dy;
  }

  [[nodiscard]] double rate() const { return rate_; }
  [[nodiscard]] const Matrix<Scalar>& mask() const { return mask_; }

 private:
  double rate_;
  bool active_ = false;
  Matrix<Scalar> mask_;
};

/// forward(x) = x + up(dropout(gelu(down(x)))), up-projection zero-initialized.
template <typename Scalar>
class AdapterBlock {
 public:
  AdapterBlock(const std::string& name, Index dim, Index bottleneck, double dropout)
      : down(name + ".down", dim, bottleneck), up(name + ".up", bottleneck, dim), dropout_(dropout) {}

  void init(Rng& rng) {
    down.init_uniform(rng);
    up.init_zero();
  }

  Matrix<Scalar> forward(const Matrix<Scalar>& x, bool training, Rng& rng) {
    if (x.cols() != down.in_features()) throw ShapeError("adapter input width mismatch");
    return x + up.forward(dropout_.forward(act_.forward(down.forward(x)), training, rng));
  }

  Matrix<Scalar> backward(const Matrix<Scalar>& dy) {
    return dy + down.backward(act_.backward(dropout_.backward(up.backward(dy))));
  }

  void collect(std::vector<Parameter<Scalar>*>& out) {
    down.collect(out);
    up.collect(out);
  }

  Linear<Scalar> down;
  Linear<Scalar> up;

 private:
  Gelu<Scalar> act_;
  Dropout<Scalar> dropout_;
};

/// Hidden layers of layer norm -> linear -> GELU -> dropout, then a linear head.
template <typename Scalar>
class MlpHead {
 public:
  MlpHead(Index in, const std::vector<Index>& hidden, Index out, double dropout)
      : head_("head.out", hidden.empty() ? in : hidden.back(), out) {
    Index width = in;
    for (std::size_t i = 0; i < hidden.size(); ++i) {
      const std::string name = "head.hidden" + std::to_string(i);
      layers_.push_back({LayerNorm<Scalar>(name + ".norm", width), Linear<Scalar>(name + ".linear", width, hidden[i]),
                         Gelu<Scalar>{}, Dropout<Scalar>(dropout)});
      width = hidden[i];
    }
  }

  void init(Rng& rng) {
    for (auto& l : layers_) l.linear.init_uniform(rng);
    head_.init_uniform(rng);
  }

  Matrix<Scalar> forward(const Matrix<Scalar>& x, bool training, Rng& rng) {
    Matrix<Scalar> h = x;
    for (auto& l : layers_) {
      h = l.dropout.forward(l.act.forward(l.linear.forward(l.norm.forward(h))), training, rng);
    }
    return head_.forward(h);
  }

  Matrix<Scalar> backward(const Matrix<Scalar>& dy) {
    Matrix<Scalar> g = head_.backward(dy);
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
      g = it->norm.backward(it->linear.backward(it->act.backward(it->dropout.backward(g))));
    }
    return g;
  }

  void collect(std::vector<Parameter<Scalar>*>& out) {
    for (auto& l : layers_) {
      l.norm.collect(out);
      l.linear.collect(out);
    }
    head_.collect(out);
  }

  [[nodiscard]] Index in_features() const {
    return layers_.empty() ? head_.in_features() : layers_.front().linear.in_features();
  }

 private:
  struct Layer {
    LayerNorm<Scalar> norm;
    Linear<Scalar> linear;
    Gelu<Scalar> act;
    Dropout<Scalar> dropout;
  };
  std::vector<Layer> layers_;
  Linear<Scalar> head_;
};

enum class Architecture : std::uint8_t { linear_head = 1, adapter = 2 };

struct NetworkConfig {
  Architecture architecture = Architecture::adapter;
  Task task = Task::ogwic;
  Index dim = 768;
  Index bottleneck = 64;
  std::vector<Index> hidden{512, 256};
  double dropout = 0.2;

  [[nodiscard]] Index outputs() const { return task == Task::ogwic ? kNumLabels : 1; }
  [[nodiscard]] FeatureLayout input_layout() const {
    return architecture == Architecture::adapter ? FeatureLayout::adapted(dim) : FeatureLayout::plain(dim);
  }
};

/// Either the plain head (dropout on [e1|e2], then one linear layer) or the
/// adapter model (one adapter per side feeding an MLP head over
/// [e1'|e2'|e1|e2|e1-e2|e1*e2|C|E|M]). Comparisons use the raw embeddings.
template <typename Scalar>
class Network {
 public:
  Network(NetworkConfig config, std::uint64_t seed)
      : config_(std::move(config)), dropout_rng_(derive_seed(seed, 1)) {
    if (config_.dim <= 0) throw std::invalid_argument("embedding dimension must be positive");
    Rng init_rng(derive_seed(seed, 0));
    const Index width = config_.input_layout().width();
    if (config_.architecture == Architecture::adapter) {
      if (config_.bottleneck <= 0) throw std::invalid_argument("adapter bottleneck must be positive");
      adapter1_.emplace("adapter1", config_.dim, config_.bottleneck, config_.dropout);
      adapter2_.emplace("adapter2", config_.dim, config_.bottleneck, config_.dropout);
      head_.emplace(width, config_.hidden, config_.outputs(), config_.dropout);
      adapter1_->init(init_rng);
      adapter2_->init(init_rng);
      head_->init(init_rng);
    } else {
      input_dropout_.emplace(config_.dropout);
      linear_.emplace("linear", width, config_.outputs());
      linear_->init_uniform(init_rng);
    }
  }

  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  /// Rows of e1/e2 are samples. Returns (batch, 4) logits or (batch, 1) scores.
  template <typename A, typename B>
  Matrix<Scalar> forward(const Eigen::MatrixBase<A>& e1, const Eigen::MatrixBase<B>& e2, bool training) {
    if (e1.cols() != config_.dim || e2.cols() != config_.dim || e1.rows() != e2.rows()) {
      throw ShapeError("network expects two (batch, " + std::to_string(config_.dim) + ") inputs, got (" +
                       std::to_string(e1.rows()) + ", " + std::to_string(e1.cols()) + ") and (" +
                       std::to_string(e2.rows()) + ", " + std::to_string(e2.cols()) + ")");
    }
    const Matrix<Scalar> x1 = e1.template cast<Scalar>();
    const Matrix<Scalar> x2 = e2.template cast<Scalar>();
    if (config_.architecture == Architecture::linear_head) {
      return linear_->forward(input_dropout_->forward(concat_rows<Scalar>(x1, x2), training, dropout_rng_));
    }
    const Matrix<Scalar> a1 = adapter1_->forward(x1, training, dropout_rng_);
    const Matrix<Scalar> a2 = adapter2_->forward(x2, training, dropout_rng_);
    return head_->forward(adapted_features(a1, a2, x1, x2), training, dropout_rng_);
  }

  /// Backpropagates d(loss)/d(output) from the most recent forward call.
  void backward(const Matrix<Scalar>& d_out) {
    if (config_.architecture == Architecture::linear_head) {
      input_dropout_->backward(linear_->backward(d_out));
      return;
    }
    const Matrix<Scalar> d_features = head_->backward(d_out);
    adapter1_->backward(d_features.leftCols(config_.dim));
    adapter2_->backward(d_features.middleCols(config_.dim, config_.dim));
  }

  std::vector<Parameter<Scalar>*> parameters() {
    std::vector<Parameter<Scalar>*> out;
    if (config_.architecture == Architecture::linear_head) {
      linear_->collect(out);
    } else {
      adapter1_->collect(out);
      adapter2_->collect(out);
      head_->collect(out);
    }
    return out;
  }

  void zero_grad() {
    for (auto* p : parameters()) p->grad.setZero();
  }

  [[nodiscard]] const NetworkConfig& config() const { return config_; }
  AdapterBlock<Scalar>& adapter(int side) { return side == 1 ? *adapter1_ : *adapter2_; }
  MlpHead<Scalar>& head() { return *head_; }

  /// [e1'|e2'|e1|e2|e1-e2|e1*e2|C|E|M] per row.
  static Matrix<Scalar> adapted_features(const Matrix<Scalar>& a1, const Matrix<Scalar>& a2,
                                         const Matrix<Scalar>& e1, const Matrix<Scalar>& e2) {
    const Index d = e1.cols();
    Matrix<Scalar> out(e1.rows(), 6 * d + 3);
    out.leftCols(d) = a1;
    out.middleCols(d, d) = a2;
    out.rightCols(4 * d + 3) = enrich_rows<Scalar>(e1, e2);
    return out;
  }

 private:
  NetworkConfig config_;
  Rng dropout_rng_;
  std::optional<AdapterBlock<Scalar>> adapter1_;
  std::optional<AdapterBlock<Scalar>> adapter2_;
  std::optional<MlpHead<Scalar>> head_;
  std::optional<Dropout<Scalar>> input_dropout_;
  std::optional<Linear<Scalar>> linear_;
};

template <typename Scalar>
struct LossResult {
  Scalar value = 0;
  Matrix<Scalar> grad;  // d(loss)/d(output), same shape as the output
};

/// Mean softmax cross-entropy; labels are 1..4 (class index label-1).
template <typename Scalar>
LossResult<Scalar> cross_entropy(const Matrix<Scalar>& logits, std::span<const int> labels) {
  if (logits.cols() != kNumLabels || logits.rows() != static_cast<Index>(labels.size())) {
    throw ShapeError("cross-entropy expects (batch, 4) logits and one label per row");
  }
  LossResult<Scalar> out;
  out.grad.resize(logits.rows(), logits.cols());
  const auto n = static_cast<Scalar>(logits.rows());
  for (Index r = 0; r < logits.rows(); ++r) {
    const int label = labels[static_cast<std::size_t>(r)];
    if (label < 1 || label > kNumLabels) throw std::invalid_argument("class label outside 1..4");
    const Scalar max = logits.row(r).maxCoeff();
    const auto shifted = (logits.row(r).array() - max).eval();
    const Scalar sum = shifted.exp().sum();
    out.value += std::log(sum) - shifted(label - 1);
    out.grad.row(r) = shifted.exp() / sum;
    out.grad(r, label - 1) -= Scalar(1);
  }
  out.value /= n;
  out.grad /= n;
  return out;
}

/// Mean squared error for (batch, 1) scores.
template <typename Scalar, typename Derived>
LossResult<Scalar> mse(const Matrix<Scalar>& scores, const Eigen::MatrixBase<Derived>& targets) {
  if (scores.cols() != 1 || scores.rows() != targets.size()) {
    throw ShapeError("MSE expects (batch, 1) scores and one target per row");
  }
  const Vector<Scalar> diff = scores.col(0) - targets.template cast<Scalar>();
  const auto n = static_cast<Scalar>(scores.rows());
  return {diff.squaredNorm() / n, Matrix<Scalar>(Scalar(2) * diff / n)};
}

struct AdamWConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

/// Adam with decoupled weight decay:
///   theta <- theta - lr * m_hat / (sqrt(v_hat) + eps) - lr * wd * theta
template <typename Scalar>
class AdamW {
 public:
  AdamW(AdamWConfig config, std::vector<Parameter<Scalar>*> params)
      : config_(config), params_(std::move(params)) {
    for (auto* p : params_) {
      m_.push_back(Matrix<Scalar>::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Matrix<Scalar>::Zero(p->value.rows(), p->value.cols()));
    }
  }

  void step() {
    ++t_;
    const auto b1 = static_cast<Scalar>(config_.beta1);
    const auto b2 = static_cast<Scalar>(config_.beta2);
    const auto lr = static_cast<Scalar>(config_.learning_rate);
    const auto wd = static_cast<Scalar>(config_.weight_decay);
    const auto eps = static_cast<Scalar>(config_.eps);
    const auto c1 = static_cast<Scalar>(1.0 - std::pow(config_.beta1, static_cast<double>(t_)));
    const auto c2 = static_cast<Scalar>(1.0 - std::pow(config_.beta2, static_cast<double>(t_)));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& p = *params_[i];
      if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) {
        throw ShapeError(p.name + ": gradient shape mismatch");
      }
      m_[i] = b1 * m_[i] + (Scalar(1) - b1) * p.grad;
      v_[i] = b2 * v_[i] + (Scalar(1) - b2) * p.grad.cwiseAbs2();
      const auto m_hat = (m_[i].array() / c1).eval();
      const auto v_hat = (v_[i].array() / c2).eval();
      p.value.array() -= lr * (m_hat / (v_hat.sqrt() + eps)) + lr * wd * p.value.array();
    }
  }

  [[nodiscard]] long steps() const { return t_; }

 private:
  AdamWConfig config_;
  std::vector<Parameter<Scalar>*> params_;
  std::vector<Matrix<Scalar>> m_;
  std::vector<Matrix<Scalar>> v_;
  long t_ = 0;
};

struct TrainConfig {
  int epochs = 10;
  int batch_size = 32;
  AdamWConfig optimizer{};
  std::uint64_t seed = 0;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  std::optional<double> dev_metric;  // alpha (OGWiC) or rho (DisWiC); empty when undefined
};

/// Class labels 1..4 from logits (argmax, ties to the lower label).
template <typename Scalar>
std::vector<int> argmax_labels(const Matrix<Scalar>& logits) {
  std::vector<int> out(static_cast<std::size_t>(logits.rows()));
  for (Index r = 0; r < logits.rows(); ++r) {
    Index best = 0;
    for (Index c = 1; c < logits.cols(); ++c)
      if (logits(r, c) > logits(r, best)) best = c;
    out[static_cast<std::size_t>(r)] = static_cast<int>(best) + 1;
  }
  return out;
}

/// Eval-mode predictions: labels 1..4 (OGWiC) or raw scores (DisWiC).
template <typename Scalar>
Eigen::VectorXd predict(Network<Scalar>& net, const TaskData& data, Index batch_size = 256) {
  Eigen::VectorXd out(data.rows());
  for (Index start = 0; start < data.rows(); start += batch_size) {
    const Index n = std::min(batch_size, data.rows() - start);
    const Matrix<Scalar> y = net.forward(data.e1.middleRows(start, n), data.e2.middleRows(start, n), false);
    if (net.config().task == Task::ogwic) {
      const auto labels = argmax_labels(y);
      for (Index i = 0; i < n; ++i) out[start + i] = labels[static_cast<std::size_t>(i)];
    } else {
      out.segment(start, n) = y.col(0).template cast<double>();
    }
  }
  return out;
}

/// Task metric of predictions against targets, empty when undefined.
inline std::optional<double> task_metric(Task task, const Eigen::VectorXd& gold, const Eigen::VectorXd& pred) {
  try {
    if (task == Task::ogwic) {
      std::vector<int> g(static_cast<std::size_t>(gold.size())), p(g.size());
      for (Index i = 0; i < gold.size(); ++i) {
        g[static_cast<std::size_t>(i)] = static_cast<int>(std::lround(gold[i]));
        p[static_cast<std::size_t>(i)] = static_cast<int>(std::lround(pred[i]));
      }
      return krippendorff_alpha_ordinal(g, p);
    }
    return spearman_rho(std::span<const double>(gold.data(), static_cast<std::size_t>(gold.size())),
                        std::span<const double>(pred.data(), static_cast<std::size_t>(pred.size())));
  } catch (const UndefinedMetric&) {
    return std::nullopt;
  }
}

/// Runs exactly `config.epochs` passes of seeded-shuffled mini-batches.
/// Embeddings are inputs only; gradients stop at the network.
template <typename Scalar>
std::vector<EpochLog> train(Network<Scalar>& net, const TaskData& data, const TaskData* dev,
                            const TrainConfig& config) {
  if (data.rows() == 0) throw DataError("cannot train on an empty dataset");
  if (config.epochs < 0 || config.batch_size <= 0) throw std::invalid_argument("invalid epochs/batch size");
  const Task task = net.config().task;
  AdamW<Scalar> optimizer(config.optimizer, net.parameters());
  Rng shuffle_rng(derive_seed(config.seed, 2));

  std::vector<Index> order(static_cast<std::size_t>(data.rows()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Index>(i);

  std::vector<EpochLog> log;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    }
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const std::vector<Index> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                    order.begin() + static_cast<std::ptrdiff_t>(end));
      const Eigen::MatrixXf e1 = data.e1(rows, Eigen::all);
      const Eigen::MatrixXf e2 = data.e2(rows, Eigen::all);
      const Eigen::VectorXd y = data.targets(rows);

      net.zero_grad();
      const Matrix<Scalar> out = net.forward(e1, e2, true);
      LossResult<Scalar> loss;
      if (task == Task::ogwic) {
        std::vector<int> labels(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) labels[i] = static_cast<int>(std::lround(y[static_cast<Index>(i)]));
        loss = cross_entropy(out, labels);
      } else {
        loss = mse(out, y);
      }
      if (!std::isfinite(static_cast<double>(loss.value))) {
        throw TrainingError("non-finite loss " + std::to_string(static_cast<double>(loss.value)) + " at epoch " +
                            std::to_string(epoch) + ", batch " + std::to_string(batches + 1) +
                            " (learning rate " + std::to_string(config.optimizer.learning_rate) + ")");
      }
      net.backward(loss.grad);
      optimizer.step();
      loss_sum += static_cast<double>(loss.value);
      ++batches;
    }
    EpochLog entry{epoch, loss_sum / static_cast<double>(batches), std::nullopt};
    if (dev && dev->rows() > 1) entry.dev_metric = task_metric(task, dev->targets, predict(net, *dev));
    log.push_back(entry);
  }
  return log;
}

}  // namespace wic::nn
