#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace wic {

/// Three increasing cut points on cosine similarity: s <= t1 -> 1,
/// t1 < s <= t2 -> 2, t2 < s <= t3 -> 3, s > t3 -> 4.
struct BinThresholds {
  double t1 = 0.0;
  double t2 = 0.0;
  double t3 = 0.0;
};

struct BinFit {
  BinThresholds thresholds;
  double alpha = 0.0;  // training-set ordinal alpha
};

inline constexpr std::size_t kMaxBinCandidates = 400;

/// Candidate cut points: midpoints between consecutive distinct sorted
/// similarities (quantile-thinned to kMaxBinCandidates when there are more),
/// plus two points below the minimum and two above the maximum so that
/// empty outer bins are reachable.
std::vector<double> bin_candidates(std::span<const double> similarities);

/// Exhaustive search over increasing candidate triples maximizing ordinal
/// alpha; ties resolve to the lexicographically smallest triple.
BinFit optimize_bins(std::span<const double> similarities, std::span<const int> gold_medians);

int apply_bins(double similarity, const BinThresholds& thresholds);
std::vector<int> apply_bins(std::span<const double> similarities, const BinThresholds& thresholds);

struct LinearModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
};

inline constexpr double kDefaultRidge = 1e-6;

/// Minimizes ||Xw + b - y||^2 + lambda ||w||^2 (bias unpenalized) through the
/// centered normal equations.
LinearModel fit_linreg(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       double lambda = kDefaultRidge);
Eigen::VectorXd predict_linreg(const LinearModel& model, const Eigen::MatrixXd& X);

std::string to_json(const BinFit& fit);
std::string to_json(const LinearModel& model);
BinFit bin_fit_from_json(const std::string& text);
LinearModel linear_model_from_json(const std::string& text);

}  // namespace wic
