#include "wic/gbdt.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <numeric>

#include "wic/error.hpp"
#include "wic/metrics.hpp"
#include "wic/random.hpp"

namespace wic::gbdt {

namespace {

constexpr char kModelMagic[4] = {'W', 'I', 'C', 'T'};
constexpr std::uint16_t kModelVersion = 1;
constexpr double kMinPrior = 1e-6;

struct NodeStats {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t count = 0;
};

struct Candidate {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

double mse_loss(const Eigen::VectorXd& y, const Eigen::VectorXd& f) { return (y - f).squaredNorm() / static_cast<double>(y.size()); }

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& raw) {
  Eigen::MatrixXd p(raw.rows(), raw.cols());
  for (Index r = 0; r < raw.rows(); ++r) {
    const auto shifted = (raw.row(r).array() - raw.row(r).maxCoeff()).exp().eval();
    p.row(r) = shifted / shifted.sum();
  }
  return p;
}

double log_loss(const Eigen::MatrixXd& raw, const std::vector<int>& labels) {
  double total = 0.0;
  for (Index r = 0; r < raw.rows(); ++r) {
    const double max = raw.row(r).maxCoeff();
    const double lse = max + std::log((raw.row(r).array() - max).exp().sum());
    total += lse - raw(r, labels[static_cast<std::size_t>(r)] - 1);
  }
  return total / static_cast<double>(raw.rows());
}

std::vector<int> sample_features(Index n_features, double rate, Rng& rng) {
  std::vector<int> all(static_cast<std::size_t>(n_features));
  std::iota(all.begin(), all.end(), 0);
  if (rate >= 1.0) return all;
  const auto keep = static_cast<std::size_t>(std::ceil(rate * static_cast<double>(n_features)));
  for (std::size_t i = 0; i < keep; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(all.size() - i));
    std::swap(all[i], all[j]);
  }
  all.resize(std::max<std::size_t>(keep, 1));
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace

int Tree::depth() const {
  std::function<int(std::size_t)> walk = [&](std::size_t i) -> int {
    if (nodes[i].leaf()) return 0;
    return 1 + std::max(walk(static_cast<std::size_t>(nodes[i].left)), walk(static_cast<std::size_t>(nodes[i].right)));
  };
  return nodes.empty() ? 0 : walk(0);
}

std::size_t Tree::leaves() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const Node& n) { return n.leaf(); }));
}

SortedColumns presort(const Eigen::MatrixXf& X) {
  SortedColumns s;
  s.order.resize(static_cast<std::size_t>(X.cols()));
  for (Index f = 0; f < X.cols(); ++f) {
    auto& o = s.order[static_cast<std::size_t>(f)];
    o.resize(static_cast<std::size_t>(X.rows()));
    std::iota(o.begin(), o.end(), 0U);
    std::stable_sort(o.begin(), o.end(), [&](std::uint32_t a, std::uint32_t b) { return X(a, f) < X(b, f); });
  }
  return s;
}

Tree build_tree(const Eigen::MatrixXf& X, const SortedColumns& sorted, const Eigen::VectorXd& targets,
                std::span<const int> features, int max_depth, int min_samples_leaf,
                std::vector<std::int32_t>* leaf_of_row) {
  const auto n = static_cast<std::size_t>(X.rows());
  if (n == 0) throw DataError("cannot grow a tree on zero rows");
  if (static_cast<std::size_t>(targets.size()) != n) throw ShapeError("targets length differs from rows");
  const auto min_leaf = static_cast<std::size_t>(std::max(min_samples_leaf, 1));

  Tree tree;
  std::vector<NodeStats> stats;
  std::vector<std::int32_t> node_of(n, 0);

  NodeStats root;
  for (std::size_t r = 0; r < n; ++r) {
    root.sum += targets[static_cast<Index>(r)];
    root.sum_sq += targets[static_cast<Index>(r)] * targets[static_cast<Index>(r)];
  }
  root.count = n;
  tree.nodes.emplace_back();
  stats.push_back(root);

  std::vector<std::int32_t> active{0};
  for (int depth = 0; depth < max_depth && !active.empty(); ++depth) {
    std::vector<int> slot_of(tree.nodes.size(), -1);
    for (std::size_t s = 0; s < active.size(); ++s) slot_of[static_cast<std::size_t>(active[s])] = static_cast<int>(s);

    std::vector<Candidate> best(active.size());
    std::vector<double> sum_left(active.size());
    std::vector<std::size_t> count_left(active.size());
    std::vector<float> last(active.size());

    for (int f : features) {
      std::fill(sum_left.begin(), sum_left.end(), 0.0);
      std::fill(count_left.begin(), count_left.end(), 0);
      for (std::uint32_t r : sorted.order[static_cast<std::size_t>(f)]) {
        const int s = slot_of[static_cast<std::size_t>(node_of[r])];
        if (s < 0) continue;
        const auto su = static_cast<std::size_t>(s);
        const float x = X(static_cast<Index>(r), f);
        const auto& st = stats[static_cast<std::size_t>(active[su])];
        if (count_left[su] > 0 && x != last[su]) {
          const std::size_t nl = count_left[su];
          const std::size_t nr = st.count - nl;
          if (nl >= min_leaf && nr >= min_leaf) {
            const double sl = sum_left[su];
            const double sr = st.sum - sl;
            const double gain = sl * sl / static_cast<double>(nl) + sr * sr / static_cast<double>(nr) -
                                st.sum * st.sum / static_cast<double>(st.count);
            // Gains within rounding noise of the node's sum of squares count as
            // ties, which keep the earlier (lower feature, lower threshold) split.
            if (gain > best[su].gain + 1e-12 * st.sum_sq) {
              best[su] = {gain, f, (static_cast<double>(last[su]) + static_cast<double>(x)) / 2.0};
            }
          }
        }
        sum_left[su] += targets[static_cast<Index>(r)];
        ++count_left[su];
        last[su] = x;
      }
    }

    std::vector<std::int32_t> next;
    std::vector<std::int32_t> split_of(tree.nodes.size(), -1);
    for (std::size_t s = 0; s < active.size(); ++s) {
      const auto id = static_cast<std::size_t>(active[s]);
      const auto& st = stats[id];
      if (best[s].feature < 0) continue;
      auto& node = tree.nodes[id];
      node.feature = best[s].feature;
      node.threshold = best[s].threshold;
      node.left = static_cast<std::int32_t>(tree.nodes.size());
      node.right = node.left + 1;
      split_of[id] = static_cast<std::int32_t>(s);
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      stats.emplace_back();
      stats.emplace_back();
      next.push_back(node.left);
      next.push_back(node.right);
    }
    for (std::size_t r = 0; r < n; ++r) {
      const auto id = static_cast<std::size_t>(node_of[r]);
      if (id >= split_of.size() || split_of[id] < 0) continue;
      const auto& node = tree.nodes[id];
      const auto child = static_cast<double>(X(static_cast<Index>(r), node.feature)) <= node.threshold ? node.left : node.right;
      node_of[r] = child;
      auto& cs = stats[static_cast<std::size_t>(child)];
      const double t = targets[static_cast<Index>(r)];
      cs.sum += t;
      cs.sum_sq += t * t;
      ++cs.count;
    }
    active = std::move(next);
  }

  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    if (tree.nodes[i].leaf()) tree.nodes[i].value = stats[i].sum / static_cast<double>(stats[i].count);
  }
  if (leaf_of_row) *leaf_of_row = std::move(node_of);
  return tree;
}

GbdtModel fit_gbdt(const Eigen::MatrixXf& X, const Eigen::VectorXd& y, Task task, const GbdtConfig& config,
                   std::vector<double>* loss_trace) {
  if (X.rows() == 0) throw DataError("cannot fit boosting on empty data");
  if (X.rows() != y.size()) throw ShapeError("X rows and y length differ");
  if (X.cols() == 0) throw ShapeError("no features");
  if (!(config.learning_rate > 0.0) || config.max_depth < 0 || config.n_rounds < 0 ||
      !(config.colsample > 0.0 && config.colsample <= 1.0)) {
    throw std::invalid_argument("invalid boosting configuration");
  }

  GbdtModel model;
  model.task = task;
  model.n_features = X.cols();
  model.learning_rate = config.learning_rate;
  model.config = config;

  const auto n = X.rows();
  const SortedColumns sorted = presort(X);
  Rng rng(derive_seed(config.seed, 3));
  std::vector<std::int32_t> leaf_of_row;

  if (task == Task::diswic) {
    model.init = {y.mean()};
    Eigen::VectorXd f = Eigen::VectorXd::Constant(n, model.init[0]);
    if (loss_trace) loss_trace->assign(1, mse_loss(y, f));
    for (int round = 0; round < config.n_rounds; ++round) {
      const auto features = sample_features(X.cols(), config.colsample, rng);
      const Eigen::VectorXd residual = y - f;
      Tree tree = build_tree(X, sorted, residual, features, config.max_depth, config.min_samples_leaf, &leaf_of_row);
      for (Index r = 0; r < n; ++r) f[r] += config.learning_rate * tree.nodes[static_cast<std::size_t>(leaf_of_row[static_cast<std::size_t>(r)])].value;
      model.rounds.push_back({std::move(tree)});
      if (loss_trace) loss_trace->push_back(mse_loss(y, f));
    }
    return model;
  }

  std::vector<int> labels(static_cast<std::size_t>(n));
  std::array<double, kNumLabels> counts{};
  for (Index r = 0; r < n; ++r) {
    const auto label = static_cast<int>(std::lround(y[r]));
    if (label < 1 || label > kNumLabels || static_cast<double>(label) != y[r]) {
      throw DataError("classification target " + std::to_string(y[r]) + " is not a label in 1..4");
    }
    labels[static_cast<std::size_t>(r)] = label;
    counts[static_cast<std::size_t>(label - 1)] += 1.0;
  }
  for (double c : counts) model.init.push_back(std::log(std::max(c / static_cast<double>(n), kMinPrior)));

  Eigen::MatrixXd raw(n, kNumLabels);
  for (int k = 0; k < kNumLabels; ++k) raw.col(k).setConstant(model.init[static_cast<std::size_t>(k)]);
  if (loss_trace) loss_trace->assign(1, log_loss(raw, labels));
  for (int round = 0; round < config.n_rounds; ++round) {
    const Eigen::MatrixXd probs = softmax_rows(raw);
    std::vector<Tree> trees;
    Eigen::MatrixXd step(n, kNumLabels);
    for (int k = 0; k < kNumLabels; ++k) {
      Eigen::VectorXd gradient = -probs.col(k);
      for (Index r = 0; r < n; ++r)
        if (labels[static_cast<std::size_t>(r)] == k + 1) gradient[r] += 1.0;
      const auto features = sample_features(X.cols(), config.colsample, rng);
      Tree tree = build_tree(X, sorted, gradient, features, config.max_depth, config.min_samples_leaf, &leaf_of_row);
      for (Index r = 0; r < n; ++r) step(r, k) = tree.nodes[static_cast<std::size_t>(leaf_of_row[static_cast<std::size_t>(r)])].value;
      trees.push_back(std::move(tree));
    }
    raw += config.learning_rate * step;
    model.rounds.push_back(std::move(trees));
    if (loss_trace) loss_trace->push_back(log_loss(raw, labels));
  }
  return model;
}

Eigen::MatrixXd predict_raw(const GbdtModel& model, const Eigen::MatrixXf& X) {
  if (X.cols() != model.n_features) {
    throw ShapeError("feature width " + std::to_string(X.cols()) + " but model expects " + std::to_string(model.n_features));
  }
  const Index k = model.outputs();
  Eigen::MatrixXd raw(X.rows(), k);
  Eigen::VectorXf row(X.cols());
  for (Index r = 0; r < X.rows(); ++r) {
    row = X.row(r).transpose();
    for (Index c = 0; c < k; ++c) {
      double sum = 0.0;
      for (const auto& trees : model.rounds) sum += trees[static_cast<std::size_t>(c)].predict(row);
      raw(r, c) = model.init[static_cast<std::size_t>(c)] + model.learning_rate * sum;
    }
  }
  return raw;
}

Eigen::MatrixXd predict_gbdt(const GbdtModel& model, const Eigen::MatrixXf& X) {
  Eigen::MatrixXd raw = predict_raw(model, X);
  return model.task == Task::ogwic ? softmax_rows(raw) : raw;
}

namespace {

template <typename T>
void put(std::string& out, T value) {
  char raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  out.append(raw, sizeof(T));
}

void put_tree(std::string& out, const Tree& tree, std::size_t i) {
  const auto& node = tree.nodes[i];
  put(out, node.feature);
  put(out, node.threshold);
  put(out, node.value);
  if (!node.leaf()) {
    put_tree(out, tree, static_cast<std::size_t>(node.left));
    put_tree(out, tree, static_cast<std::size_t>(node.right));
  }
}

std::size_t count_nodes(const Tree& tree, std::size_t i) {
  const auto& node = tree.nodes[i];
  return node.leaf() ? 1 : 1 + count_nodes(tree, static_cast<std::size_t>(node.left)) + count_nodes(tree, static_cast<std::size_t>(node.right));
}

class Reader {
 public:
  explicit Reader(std::vector<char> bytes) : bytes_(std::move(bytes)) {}
  template <typename T>
  T get(const char* what) {
    if (bytes_.size() - offset_ < sizeof(T)) {
      throw FormatError("tree model truncated at byte offset " + std::to_string(offset_) + " while reading " + what);
    }
    T value;
    std::memcpy(&value, bytes_.data() + offset_, sizeof(T));
    offset_ += sizeof(T);
    return value;
  }
  [[nodiscard]] bool done() const { return offset_ == bytes_.size(); }

 private:
  std::vector<char> bytes_;
  std::size_t offset_ = 0;
};

std::int32_t read_subtree(Reader& in, Tree& tree, std::size_t& budget, Index n_features) {
  if (budget == 0) throw FormatError("tree node count does not match preorder layout");
  --budget;
  Node node;
  node.feature = in.get<std::int32_t>("node feature");
  node.threshold = in.get<double>("node threshold");
  node.value = in.get<double>("node value");
  if (node.feature >= n_features) throw FormatError("tree split on feature " + std::to_string(node.feature) + " out of range");
  const auto id = static_cast<std::int32_t>(tree.nodes.size());
  tree.nodes.push_back(node);
  if (node.feature >= 0) {
    const auto left = read_subtree(in, tree, budget, n_features);
    const auto right = read_subtree(in, tree, budget, n_features);
    tree.nodes[static_cast<std::size_t>(id)].left = left;
    tree.nodes[static_cast<std::size_t>(id)].right = right;
  }
  return id;
}

}  // namespace

// Layout (little-endian): "WICT" | u16 version | u8 task | u32 features | f64 lr
// | i32 max_depth | f64 colsample | i32 min_samples_leaf | u64 seed
// | u32 outputs | f64 x outputs init | u32 rounds
// | per round, per output: u32 node count, then preorder nodes (i32 feature, f64 threshold, f64 value).
void save_model(const GbdtModel& model, const std::filesystem::path& path) {
  std::string out;
  out.append(kModelMagic, 4);
  put(out, kModelVersion);
  put(out, static_cast<std::uint8_t>(model.task == Task::ogwic ? 0 : 1));
  put(out, static_cast<std::uint32_t>(model.n_features));
  put(out, model.learning_rate);
  put(out, static_cast<std::int32_t>(model.config.max_depth));
  put(out, model.config.colsample);
  put(out, static_cast<std::int32_t>(model.config.min_samples_leaf));
  put(out, model.config.seed);
  put(out, static_cast<std::uint32_t>(model.init.size()));
  for (double v : model.init) put(out, v);
  put(out, static_cast<std::uint32_t>(model.rounds.size()));
  for (const auto& trees : model.rounds) {
    for (const auto& tree : trees) {
      put(out, static_cast<std::uint32_t>(count_nodes(tree, 0)));
      put_tree(out, tree, 0);
    }
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw DataError("cannot write " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw DataError("write failed for " + path.string());
}

GbdtModel load_model(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot open tree model " + path.string());
  Reader in(std::vector<char>((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>()));
  char magic[4];
  for (char& c : magic) c = in.get<char>("magic");
  if (std::memcmp(magic, kModelMagic, 4) != 0) throw FormatError(path.string() + ": not a tree model (bad magic)");
  if (const auto v = in.get<std::uint16_t>("version"); v != kModelVersion) {
    throw FormatError("unsupported tree model version " + std::to_string(v));
  }
  GbdtModel model;
  const auto task = in.get<std::uint8_t>("task");
  if (task > 1) throw FormatError("unknown task code");
  model.task = task == 0 ? Task::ogwic : Task::diswic;
  model.n_features = in.get<std::uint32_t>("feature count");
  model.learning_rate = in.get<double>("learning rate");
  model.config.learning_rate = model.learning_rate;
  model.config.max_depth = in.get<std::int32_t>("max depth");
  model.config.colsample = in.get<double>("colsample");
  model.config.min_samples_leaf = in.get<std::int32_t>("min samples leaf");
  model.config.seed = in.get<std::uint64_t>("seed");
  const auto outputs = in.get<std::uint32_t>("output count");
  if (outputs != (model.task == Task::ogwic ? kNumLabels : 1)) throw FormatError("output count does not match task");
  for (std::uint32_t i = 0; i < outputs; ++i) model.init.push_back(in.get<double>("init"));
  const auto rounds = in.get<std::uint32_t>("round count");
  model.config.n_rounds = static_cast<int>(rounds);
  for (std::uint32_t r = 0; r < rounds; ++r) {
    std::vector<Tree> trees(outputs);
    for (auto& tree : trees) {
      std::size_t budget = in.get<std::uint32_t>("node count");
      read_subtree(in, tree, budget, model.n_features);
      if (budget != 0) throw FormatError("tree node count does not match preorder layout");
    }
    model.rounds.push_back(std::move(trees));
  }
  if (!in.done()) throw FormatError(path.string() + ": trailing bytes after trees");
  return model;
}

}  // namespace wic::gbdt

namespace wic {

std::vector<int> combine_labels(const Eigen::MatrixXd& probs_c, const Eigen::MatrixXd& probs_x, double w_c, double w_x) {
  if (probs_c.rows() != probs_x.rows() || probs_c.cols() != kNumLabels || probs_x.cols() != kNumLabels) {
    throw ShapeError("ensemble members must give (rows, 4) probabilities for the same rows");
  }
  std::vector<int> out(static_cast<std::size_t>(probs_c.rows()));
  for (Eigen::Index r = 0; r < probs_c.rows(); ++r) {
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < kNumLabels; ++k) {
      const double score = w_c * probs_c(r, k) + w_x * probs_x(r, k);
      if (score > best_score) {
        best_score = score;
        best = k;
      }
    }
    out[static_cast<std::size_t>(r)] = best + 1;
  }
  return out;
}

Eigen::VectorXd combine_scores(const Eigen::VectorXd& scores_c, const Eigen::VectorXd& scores_x, double w_c, double w_x) {
  if (scores_c.size() != scores_x.size()) throw ShapeError("ensemble members must score the same rows");
  return w_c * scores_c + w_x * scores_x;
}

}  // namespace wic
