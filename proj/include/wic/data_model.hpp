#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace wic {

enum class Task { ogwic, diswic };

std::string_view to_string(Task task);
Task parse_task(std::string_view name);

/// One use of a lemma: a context and the character span of the target word.
struct Usage {
  std::string usage_id;
  std::string context;
  std::string lemma;
  std::size_t target_start = 0;  // code points, 0-based
  std::size_t target_end = 0;    // exclusive
  std::string language;
};

struct TaskTargets {
  std::optional<int> median_label;
  std::optional<double> mean_disagreement;
};

struct Instance {
  std::string instance_id;
  std::string usage_1;
  std::string usage_2;
  std::string lemma;
  std::string language;
  std::vector<int> ratings;
  TaskTargets targets;

  [[nodiscard]] bool eligible(Task task) const;
  [[nodiscard]] double target(Task task) const;
};

/// Median of ordinal ratings, absent when the conventional median is not
/// integral (mean of the two middle values for an even count).
/// Throws DataError naming `instance_id` for ratings outside 1..4.
std::optional<int> median_label(std::span<const int> ratings, std::string_view instance_id = {});

/// Mean absolute difference over all unordered annotator pairs.
/// Throws DataError when fewer than two ratings are given.
double mean_pairwise_disagreement(std::span<const int> ratings, std::string_view instance_id = {});

TaskTargets compute_targets(std::span<const int> ratings, std::string_view instance_id = {});

/// Number of Unicode code points in a UTF-8 string.
std::size_t utf8_length(std::string_view text);

struct Dataset {
  std::vector<Usage> usages;
  std::unordered_map<std::string, std::size_t> usage_index;
  std::vector<Instance> instances;
  std::size_t discarded_ogwic = 0;  // no integral median
  std::size_t discarded_diswic = 0; // fewer than two ratings

  [[nodiscard]] const Usage& usage(const std::string& id) const;
  [[nodiscard]] std::vector<const Instance*> task_instances(Task task) const;
  [[nodiscard]] std::size_t count(Task task) const;
};

/// Loads `usages.tsv` + `instances.tsv` (tab-separated, header row).
Dataset load_dataset(const std::filesystem::path& usages_path,
                     const std::filesystem::path& instances_path);

/// Parses already-read TSV text; `source` names the input in error messages.
Dataset parse_dataset(std::string_view usages_tsv, std::string_view instances_tsv,
                      std::string_view source = "<memory>");

/// Parses an instances TSV on its own (no usage resolution); used for gold files.
std::vector<Instance> parse_instances(std::string_view instances_tsv, std::string_view source = "<memory>");
std::vector<Instance> load_instances(const std::filesystem::path& instances_path);

std::string escape_field(std::string_view text);
std::string unescape_field(std::string_view text);

void write_usages_tsv(const std::filesystem::path& path, std::span<const Usage> usages);
void write_instances_tsv(const std::filesystem::path& path, std::span<const Instance> instances);

struct LanguageStats {
  std::size_t unique_contexts = 0;
  std::size_t unique_lemmas = 0;
  long context_length = 0;  // mean whitespace-separated words, rounded
  std::size_t ogwic_instances = 0;
  std::size_t diswic_instances = 0;
};

struct StatsTable {
  std::map<std::string, LanguageStats> per_language;
  LanguageStats average;  // per-language mean of each column, rounded
};

StatsTable dataset_stats(const Dataset& dataset);

std::size_t word_count(std::string_view text);

}  // namespace wic
