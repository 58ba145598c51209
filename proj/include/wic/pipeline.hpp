#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wic/data_model.hpp"
#include "wic/gbdt.hpp"
#include "wic/neural.hpp"

namespace wic {

enum class Method { baseline, xlmr, adapter, ensemble };

std::string_view to_string(Method method);
Method parse_method(std::string_view name);

struct SplitPaths {
  std::filesystem::path usages;
  std::filesystem::path instances;
};

/// Experiment description read from a JSON config. Relative paths resolve
/// against the config file's directory; unknown keys are rejected.
struct ExperimentConfig {
  std::map<std::string, SplitPaths> data;  // split name -> files
  std::filesystem::path embeddings;
  std::filesystem::path output_dir = "out";
  Task task = Task::ogwic;
  Method method = Method::adapter;
  std::uint64_t seed = 0;
  bool per_language = false;
  std::string train_split = "train";
  std::string dev_split = "dev";
  std::string predict_split = "test";
  std::string stats_split = "train";
  std::string density_split = "train";

  // neural
  nn::TrainConfig neural{};
  Eigen::Index bottleneck = 64;
  std::vector<Eigen::Index> hidden{512, 256};
  double dropout = 0.2;

  // ensemble members
  gbdt::GbdtConfig gbdt_c = gbdt::GbdtConfig::c_variant();
  gbdt::GbdtConfig gbdt_x = gbdt::GbdtConfig::x_variant();

  double ridge_lambda = 1e-6;
  int density_bins = 50;

  [[nodiscard]] const SplitPaths& split(const std::string& name) const;
};

ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

struct CliOptions {
  std::filesystem::path config;
  bool per_language = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> split;
  std::optional<std::filesystem::path> gold;  // evaluate: instances TSV
  std::optional<std::filesystem::path> pred;  // evaluate: predictions TSV
};

/// Applies the command-line overrides (seed, per-language) to a config.
ExperimentConfig resolve_config(const CliOptions& options);

// Commands. Each throws DataError / UndefinedMetric; `run_command` maps
// those to exit codes 2 / 3.
void cmd_stats(const ExperimentConfig& config, const std::optional<std::string>& split, std::ostream& out,
               std::ostream& log);
void cmd_train(const ExperimentConfig& config, std::ostream& out, std::ostream& log);
void cmd_predict(const ExperimentConfig& config, std::ostream& out, std::ostream& log);
void cmd_evaluate(const ExperimentConfig& config, const std::optional<std::filesystem::path>& gold,
                  const std::optional<std::filesystem::path>& pred, std::ostream& out, std::ostream& log);
void cmd_plot_density(const ExperimentConfig& config, const std::optional<std::string>& split, std::ostream& out,
                      std::ostream& log);

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitDataError = 2;
inline constexpr int kExitUndefinedMetric = 3;

int run_command(const std::string& command, const CliOptions& options, std::ostream& out, std::ostream& log);

// Lower-level pieces shared with the tests.

struct DensityCurve {
  int label = 0;
  std::size_t count = 0;
  std::vector<double> density;  // one value per bin, unit area
};

struct DensityTable {
  double lo = 0.0;
  double hi = 0.0;
  int bins = 0;
  std::vector<DensityCurve> curves;  // labels with at least one instance
  std::vector<int> empty_labels;

  [[nodiscard]] double bin_width() const { return (hi - lo) / bins; }
};

/// Per-label histograms of similarity over the observed range, normalized to unit area.
DensityTable similarity_densities(std::span<const double> similarities, std::span<const int> labels, int bins);

struct LanguageScore {
  std::string language;
  std::size_t count = 0;
  std::optional<double> score;  // empty when the metric is undefined
};

struct EvaluationReport {
  Task task = Task::ogwic;
  std::vector<LanguageScore> per_language;
  std::optional<double> average;  // mean over defined languages
  std::optional<double> pooled;   // one score over all instances
};

EvaluationReport evaluate_predictions(Task task, const std::vector<Instance>& gold,
                                      const std::vector<std::pair<std::string, double>>& predictions);

std::vector<std::pair<std::string, double>> read_predictions(const std::filesystem::path& path);

}  // namespace wic
