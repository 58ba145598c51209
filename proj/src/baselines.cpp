#include "wic/baselines.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "json.hpp"

#include "wic/error.hpp"
#include "wic/metrics.hpp"

namespace wic {

std::vector<double> bin_candidates(std::span<const double> similarities) {
  std::vector<double> distinct(similarities.begin(), similarities.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 2) throw DataError("bin search needs at least 2 distinct similarities");

  std::vector<double> midpoints;
  midpoints.reserve(distinct.size() - 1);
  for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
    midpoints.push_back(distinct[i] + (distinct[i + 1] - distinct[i]) / 2.0);
  }
  if (midpoints.size() > kMaxBinCandidates) {
    // Quantile thinning: keep the midpoint at the centre of each of 400 equal-count strata.
    std::vector<double> thinned;
    const double m = static_cast<double>(midpoints.size());
    for (std::size_t q = 0; q < kMaxBinCandidates; ++q) {
      const auto idx = static_cast<std::size_t>(
          (static_cast<double>(q) + 0.5) * m / static_cast<double>(kMaxBinCandidates));
      thinned.push_back(midpoints[std::min(idx, midpoints.size() - 1)]);
    }
    thinned.erase(std::unique(thinned.begin(), thinned.end()), thinned.end());
    midpoints = std::move(thinned);
  }

  std::vector<double> out;
  out.reserve(midpoints.size() + 4);
  out.push_back(distinct.front() - 2.0);
  out.push_back(distinct.front() - 1.0);
  out.insert(out.end(), midpoints.begin(), midpoints.end());
  out.push_back(distinct.back() + 1.0);
  out.push_back(distinct.back() + 2.0);
  return out;
}

BinFit optimize_bins(std::span<const double> similarities, std::span<const int> gold_medians) {
  if (similarities.size() != gold_medians.size()) throw ShapeError("similarity/label lengths differ");
  if (similarities.size() < 4) throw DataError("bin search needs at least 4 instances");
  for (double s : similarities)
    if (std::isnan(s)) throw DataError("NaN similarity in bin search");
  std::array<std::size_t, kNumLabels> label_counts{};
  for (int g : gold_medians) {
    if (g < 1 || g > kNumLabels) throw DataError("gold median outside 1..4");
    ++label_counts[static_cast<std::size_t>(g - 1)];
  }
  if (std::count_if(label_counts.begin(), label_counts.end(), [](auto c) { return c > 0; }) < 2) {
    throw DataError("bin search needs gold labels from at least 2 classes");
  }

  const auto candidates = bin_candidates(similarities);
  const std::size_t m = candidates.size();

  // below[c][g]: instances with similarity <= candidates[c] and gold label g.
  std::vector<std::size_t> order(similarities.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return similarities[a] < similarities[b]; });
  std::vector<Eigen::Vector4d> below(m, Eigen::Vector4d::Zero());
  {
    Eigen::Vector4d running = Eigen::Vector4d::Zero();
    std::size_t pos = 0;
    for (std::size_t c = 0; c < m; ++c) {
      while (pos < order.size() && similarities[order[pos]] <= candidates[c]) {
        running[gold_medians[order[pos]] - 1] += 1.0;
        ++pos;
      }
      below[c] = running;
    }
  }
  Eigen::Vector4d totals;
  for (int g = 0; g < kNumLabels; ++g) totals[g] = static_cast<double>(label_counts[g]);

  BinFit best;
  best.alpha = -std::numeric_limits<double>::infinity();
  bool found = false;
  CoincidenceMatrix o;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      for (std::size_t k = j + 1; k < m; ++k) {
        // Row b of `confusion` holds gold counts for predicted bin b.
        Eigen::Matrix4d confusion;
        confusion.row(0) = below[i].transpose();
        confusion.row(1) = (below[j] - below[i]).transpose();
        confusion.row(2) = (below[k] - below[j]).transpose();
        confusion.row(3) = (totals - below[k]).transpose();
        o = confusion + confusion.transpose();
        const double a = alpha_from_coincidences(o);
        if (!found || a > best.alpha) {
          best = {{candidates[i], candidates[j], candidates[k]}, a};
          found = true;
        }
      }
    }
  }
  return best;
}

int apply_bins(double similarity, const BinThresholds& t) {
  if (std::isnan(similarity)) throw DataError("NaN similarity");
  if (similarity <= t.t1) return 1;
  if (similarity <= t.t2) return 2;
  if (similarity <= t.t3) return 3;
  return 4;
}

std::vector<int> apply_bins(std::span<const double> similarities, const BinThresholds& t) {
  std::vector<int> out;
  out.reserve(similarities.size());
  for (double s : similarities) out.push_back(apply_bins(s, t));
  return out;
}

LinearModel fit_linreg(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda) {
  if (X.rows() < 1) throw DataError("linear regression needs at least one row");
  if (X.rows() != y.size()) throw ShapeError("X rows and y length differ");
  if (lambda < 0.0) throw std::invalid_argument("ridge lambda must be non-negative");

  const Eigen::RowVectorXd x_mean = X.colwise().mean();
  const double y_mean = y.mean();
  const Eigen::MatrixXd Xc = X.rowwise() - x_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;

  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(X.cols(), X.cols());
  gram.selfadjointView<Eigen::Lower>().rankUpdate(Xc.transpose());
  gram.diagonal().array() += lambda;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram.selfadjointView<Eigen::Lower>());
  const Eigen::VectorXd pivots = ldlt.vectorD().cwiseAbs();
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      (lambda == 0.0 && (ldlt.rcond() < 1e-13 || pivots.minCoeff() <= 1e-12 * pivots.maxCoeff()))) {
    throw DataError("normal equations are singular; use a positive ridge lambda");
  }
  LinearModel model;
  model.weights = ldlt.solve(Xc.transpose() * yc);
  model.bias = y_mean - x_mean.dot(model.weights);
  return model;
}

Eigen::VectorXd predict_linreg(const LinearModel& model, const Eigen::MatrixXd& X) {
  if (X.cols() != model.weights.size()) {
    throw ShapeError("feature width " + std::to_string(X.cols()) + " but model expects " +
                     std::to_string(model.weights.size()));
  }
  return (X * model.weights).array() + model.bias;
}

std::string to_json(const BinFit& fit) {
  nlohmann::json j = {{"t1", fit.thresholds.t1},
                      {"t2", fit.thresholds.t2},
                      {"t3", fit.thresholds.t3},
                      {"alpha", fit.alpha}};
  return j.dump(2);
}

std::string to_json(const LinearModel& model) {
  nlohmann::json j;
  j["bias"] = model.bias;
  j["weights"] = std::vector<double>(model.weights.data(), model.weights.data() + model.weights.size());
  return j.dump();
}

BinFit bin_fit_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    BinFit fit{{j.at("t1").get<double>(), j.at("t2").get<double>(), j.at("t3").get<double>()},
               j.at("alpha").get<double>()};
    if (!(fit.thresholds.t1 < fit.thresholds.t2 && fit.thresholds.t2 < fit.thresholds.t3)) {
      throw DataError("bin thresholds must be strictly increasing");
    }
    return fit;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("invalid bin threshold artifact: ") + e.what());
  }
}

LinearModel linear_model_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    const auto w = j.at("weights").get<std::vector<double>>();
    LinearModel model;
    model.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    model.bias = j.at("bias").get<double>();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("invalid linear model artifact: ") + e.what());
  }
}

}  // namespace wic
