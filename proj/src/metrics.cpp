#include "wic/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "wic/error.hpp"

namespace wic {

namespace {

void check_labels(std::span<const int> labels) {
  for (int v : labels) {
    if (v < 1 || v > kNumLabels) {
      throw std::invalid_argument("label " + std::to_string(v) + " outside 1..4");
    }
  }
}

}  // namespace

CoincidenceMatrix coincidence_matrix(std::span<const int> gold, std::span<const int> pred) {
  if (gold.size() != pred.size()) throw ShapeError("gold and pred lengths differ");
  check_labels(gold);
  check_labels(pred);
  CoincidenceMatrix o = CoincidenceMatrix::Zero();
  for (std::size_t i = 0; i < gold.size(); ++i) {
    o(gold[i] - 1, pred[i] - 1) += 1.0;
    o(pred[i] - 1, gold[i] - 1) += 1.0;
  }
  return o;
}

double alpha_from_coincidences(const CoincidenceMatrix& o) {
  const Eigen::Matrix<double, kNumLabels, 1> marginals = o.rowwise().sum();
  const double total = marginals.sum();  // 2n pairable values

  // Ordinal metric: delta^2(c,k) = (sum_{g=c..k} n_g - (n_c + n_k)/2)^2.
  CoincidenceMatrix delta2 = CoincidenceMatrix::Zero();
  for (int c = 0; c < kNumLabels; ++c) {
    for (int k = c + 1; k < kNumLabels; ++k) {
      const double span = marginals.segment(c, k - c + 1).sum() - (marginals[c] + marginals[k]) / 2;
      delta2(c, k) = delta2(k, c) = span * span;
    }
  }

  const double observed = o.cwiseProduct(delta2).sum();
  const double expected = (marginals * marginals.transpose()).cwiseProduct(delta2).sum();
  if (total < 2 || expected == 0.0) {
    throw UndefinedMetric("Krippendorff's alpha undefined: zero expected disagreement");
  }
  // 1 - D_o/D_e with D_o = observed/total and D_e = expected/(total (total-1)).
  return 1.0 - (total - 1.0) * observed / expected;
}

double krippendorff_alpha_ordinal(std::span<const int> gold, std::span<const int> pred) {
  if (gold.size() != pred.size()) throw ShapeError("gold and pred lengths differ");
  return alpha_from_coincidences(coincidence_matrix(gold, pred));
}

std::vector<double> average_ranks(std::span<const double> values) {
  const auto n = values.size();
  for (double v : values) {
    if (std::isnan(v)) throw std::invalid_argument("cannot rank NaN");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // Ranks i+1..j share their mean.
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("series lengths differ");
  if (a.size() < 2) throw UndefinedMetric("correlation needs at least 2 values");
  const Eigen::Map<const Eigen::VectorXd> x(a.data(), static_cast<Eigen::Index>(a.size()));
  const Eigen::Map<const Eigen::VectorXd> y(b.data(), static_cast<Eigen::Index>(b.size()));
  const Eigen::VectorXd xc = x.array() - x.mean();
  const Eigen::VectorXd yc = y.array() - y.mean();
  const double sxx = xc.squaredNorm();
  const double syy = yc.squaredNorm();
  if (sxx == 0.0 || syy == 0.0) throw UndefinedMetric("correlation undefined for a constant series");
  // Equal spreads (always the case for tie-free ranks) skip the square root so
  // that a reversed series gives exactly -1.
  const double denom = sxx == syy ? sxx : std::sqrt(sxx) * std::sqrt(syy);
  return std::clamp(xc.dot(yc) / denom, -1.0, 1.0);
}

double spearman_rho(std::span<const double> gold, std::span<const double> pred) {
  if (gold.size() != pred.size()) throw ShapeError("series lengths differ");
  const auto rg = average_ranks(gold);
  const auto rp = average_ranks(pred);
  return pearson(rg, rp);
}

}  // namespace wic
