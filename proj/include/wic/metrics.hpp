#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace wic {

inline constexpr int kNumLabels = 4;

using CoincidenceMatrix = Eigen::Matrix<double, kNumLabels, kNumLabels>;

/// Two-rater coincidence matrix over labels 1..4: each (gold, pred) unit adds
/// one to o[g,p] and one to o[p,g].
CoincidenceMatrix coincidence_matrix(std::span<const int> gold, std::span<const int> pred);

/// Ordinal Krippendorff's alpha from a coincidence matrix (total 2n values).
/// Throws UndefinedMetric when the expected disagreement is zero.
double alpha_from_coincidences(const CoincidenceMatrix& o);

/// Ordinal Krippendorff's alpha between gold and predicted labels in 1..4,
/// treating each item as a unit coded by two raters.
double krippendorff_alpha_ordinal(std::span<const int> gold, std::span<const int> pred);

/// 1-based ranks; ties share the mean of their rank block. Throws on NaN.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation; throws UndefinedMetric when either series is constant.
double pearson(std::span<const double> a, std::span<const double> b);

/// Spearman's rho: Pearson correlation of average ranks.
double spearman_rho(std::span<const double> gold, std::span<const double> pred);

}  // namespace wic
