#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "wic/data_model.hpp"

namespace wic::gbdt {

using Eigen::Index;

struct GbdtConfig {
  double learning_rate = 0.05;
  int max_depth = 6;  // edges from the root
  int n_rounds = 500;
  double colsample = 1.0;  // fraction of features drawn per tree
  int min_samples_leaf = 1;
  std::uint64_t seed = 0;

  /// Full-column configuration standing in for the CatBoost member.
  static GbdtConfig c_variant() { return {}; }
  /// Column-subsampled configuration standing in for the XGBoost member.
  static GbdtConfig x_variant() {
    GbdtConfig c;
    c.colsample = 0.8;
    return c;
  }
};

/// Flat binary tree; `feature < 0` marks a leaf. Rows go left when x <= threshold.
struct Node {
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;

  [[nodiscard]] bool leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<Node> nodes;  // nodes[0] is the root

  template <typename Row>
  double predict(const Row& x) const {
    std::size_t i = 0;
    while (!nodes[i].leaf()) {
      const auto& n = nodes[i];
      i = static_cast<std::size_t>(static_cast<double>(x[n.feature]) <= n.threshold ? n.left : n.right);
    }
    return nodes[i].value;
  }

  [[nodiscard]] int depth() const;
  [[nodiscard]] std::size_t leaves() const;
};

/// Row indices of every column sorted by value (stable for equal values).
struct SortedColumns {
  std::vector<std::vector<std::uint32_t>> order;
};
SortedColumns presort(const Eigen::MatrixXf& X);

/// Greedy exact least-squares tree on `targets` (variance-reduction gain,
/// mean-target leaves), grown level by level. Equal gains resolve to the
/// lowest feature index, then the lowest threshold. When `leaf_of_row` is
/// given it receives the leaf index reached by every training row.
Tree build_tree(const Eigen::MatrixXf& X, const SortedColumns& sorted, const Eigen::VectorXd& targets,
                std::span<const int> features, int max_depth, int min_samples_leaf,
                std::vector<std::int32_t>* leaf_of_row = nullptr);

struct GbdtModel {
  Task task = Task::diswic;
  Index n_features = 0;
  double learning_rate = 0.05;
  GbdtConfig config;
  std::vector<double> init;              // 1 (regression) or 4 (class log priors)
  std::vector<std::vector<Tree>> rounds; // rounds[r][k]: one tree per output

  [[nodiscard]] Index outputs() const { return static_cast<Index>(init.size()); }
};

/// Regression: stagewise least squares on residuals from mean(y).
/// Classification (labels 1..4): one tree per class per round on the softmax
/// negative gradient, starting from log class priors.
/// `loss_trace`, when given, receives the training loss before the first
/// round and after every round (MSE or mean multiclass log-loss).
GbdtModel fit_gbdt(const Eigen::MatrixXf& X, const Eigen::VectorXd& y, Task task, const GbdtConfig& config,
                   std::vector<double>* loss_trace = nullptr);

/// Accumulated raw scores, (rows, outputs).
Eigen::MatrixXd predict_raw(const GbdtModel& model, const Eigen::MatrixXf& X);

/// Regression: (rows, 1) scores. Classification: (rows, 4) class probabilities.
Eigen::MatrixXd predict_gbdt(const GbdtModel& model, const Eigen::MatrixXf& X);

void save_model(const GbdtModel& model, const std::filesystem::path& path);
GbdtModel load_model(const std::filesystem::path& path);

}  // namespace wic::gbdt

namespace wic {

/// Fixed weights of the two-member ensemble.
struct EnsembleWeights {
  static constexpr double ogwic_c = 0.4;
  static constexpr double ogwic_x = 0.3;
  static constexpr double diswic_c = 0.4;
  static constexpr double diswic_x = 0.6;
};

/// argmax over classes of w_c * p_c + w_x * p_x; ties go to the lower label.
std::vector<int> combine_labels(const Eigen::MatrixXd& probs_c, const Eigen::MatrixXd& probs_x,
                                double w_c = EnsembleWeights::ogwic_c, double w_x = EnsembleWeights::ogwic_x);

/// w_c * s_c + w_x * s_x.
Eigen::VectorXd combine_scores(const Eigen::VectorXd& scores_c, const Eigen::VectorXd& scores_x,
                               double w_c = EnsembleWeights::diswic_c, double w_x = EnsembleWeights::diswic_x);

}  // namespace wic
