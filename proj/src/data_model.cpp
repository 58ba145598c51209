#include "wic/data_model.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "wic/error.hpp"

namespace wic {

namespace {

std::string instance_label(std::string_view instance_id) {
  return instance_id.empty() ? std::string("<unnamed>") : std::string(instance_id);
}

void check_ratings(std::span<const int> ratings, std::string_view instance_id) {
  for (int r : ratings) {
    if (r < 1 || r > 4) {
      throw DataError("instance " + instance_label(instance_id) + ": rating " + std::to_string(r) +
                      " outside 1..4");
    }
  }
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

// Non-empty lines with their 1-based line numbers; strips a trailing '\r'.
std::vector<std::pair<std::size_t, std::string_view>> lines_of(std::string_view text) {
  std::vector<std::pair<std::size_t, std::string_view>> out;
  std::size_t number = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++number;
    if (!line.empty()) out.emplace_back(number, line);
    start = end + 1;
  }
  return out;
}

std::size_t parse_size(std::string_view field, std::string_view where) {
  std::size_t value = 0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || field.empty()) {
    throw DataError(std::string(where) + ": expected a non-negative integer, got '" +
                    std::string(field) + "'");
  }
  return value;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void expect_header(std::string_view line, const std::vector<std::string_view>& expected,
                   std::string_view source) {
  const auto fields = split(line, '\t');
  if (fields != expected) {
    std::string want;
    for (auto f : expected) want += std::string(want.empty() ? "" : ",") + std::string(f);
    throw DataError(std::string(source) + ":1: header must be " + want);
  }
}

}  // namespace

std::string_view to_string(Task task) { return task == Task::ogwic ? "ogwic" : "diswic"; }

Task parse_task(std::string_view name) {
  if (name == "ogwic") return Task::ogwic;
  if (name == "diswic") return Task::diswic;
  throw ConfigError("unknown task '" + std::string(name) + "' (expected ogwic or diswic)");
}

bool Instance::eligible(Task task) const {
  return task == Task::ogwic ? targets.median_label.has_value()
                             : targets.mean_disagreement.has_value();
}

double Instance::target(Task task) const {
  if (!eligible(task)) {
    throw DataError("instance " + instance_id + " has no " + std::string(to_string(task)) +
                    " target");
  }
  return task == Task::ogwic ? static_cast<double>(*targets.median_label)
                             : *targets.mean_disagreement;
}

std::optional<int> median_label(std::span<const int> ratings, std::string_view instance_id) {
  if (ratings.empty()) throw DataError("instance " + instance_label(instance_id) + ": no ratings");
  check_ratings(ratings, instance_id);
  std::vector<int> sorted(ratings.begin(), ratings.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = sorted.size();
  if (n % 2 == 1) return sorted[n / 2];
  const int sum = sorted[n / 2 - 1] + sorted[n / 2];
  if (sum % 2 != 0) return std::nullopt;
  return sum / 2;
}

double mean_pairwise_disagreement(std::span<const int> ratings, std::string_view instance_id) {
  check_ratings(ratings, instance_id);
  const auto n = ratings.size();
  if (n < 2) {
    throw DataError("instance " + instance_label(instance_id) +
                    ": mean disagreement undefined for fewer than 2 ratings");
  }
  // Counting by value keeps the sum exact: sum_{a<b} count_a * count_b * (b - a).
  std::array<long, 5> counts{};
  for (int r : ratings) ++counts[static_cast<std::size_t>(r)];
  long total = 0;
  for (int a = 1; a <= 4; ++a)
    for (int b = a + 1; b <= 4; ++b) total += counts[a] * counts[b] * (b - a);
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  return static_cast<double>(total) / pairs;
}

TaskTargets compute_targets(std::span<const int> ratings, std::string_view instance_id) {
  TaskTargets t;
  t.median_label = median_label(ratings, instance_id);
  if (ratings.size() >= 2) t.mean_disagreement = mean_pairwise_disagreement(ratings, instance_id);
  return t;
}

std::size_t utf8_length(std::string_view text) {
  return static_cast<std::size_t>(std::count_if(text.begin(), text.end(), [](char c) {
    return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
  }));
}

std::size_t word_count(std::string_view text) {
  std::size_t words = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  return words;
}

std::string escape_field(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape_field(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '\\' || i + 1 == text.size()) {
      out += text[i];
      continue;
    }
    switch (text[++i]) {
      case 't': out += '\t'; break;
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      case '\\': out += '\\'; break;
      default:
        out += '\\';
        out += text[i];
    }
  }
  return out;
}

const Usage& Dataset::usage(const std::string& id) const {
  const auto it = usage_index.find(id);
  if (it == usage_index.end()) throw DataError("unknown usage '" + id + "'");
  return usages[it->second];
}

std::vector<const Instance*> Dataset::task_instances(Task task) const {
  std::vector<const Instance*> out;
  for (const auto& inst : instances)
    if (inst.eligible(task)) out.push_back(&inst);
  return out;
}

std::size_t Dataset::count(Task task) const {
  return static_cast<std::size_t>(std::count_if(
      instances.begin(), instances.end(), [task](const Instance& i) { return i.eligible(task); }));
}

std::vector<Instance> parse_instances(std::string_view instances_tsv, std::string_view source) {
  std::vector<Instance> out;
  auto instance_lines = lines_of(instances_tsv);
  if (!instance_lines.empty()) {
    expect_header(instance_lines.front().second,
                  {"instance_id", "lemma", "language", "usage_1", "usage_2", "ratings"}, source);
  }
  std::set<std::string, std::less<>> seen;
  for (std::size_t i = 1; i < instance_lines.size(); ++i) {
    const auto [number, line] = instance_lines[i];
    const std::string where = std::string(source) + ":" + std::to_string(number);
    const auto f = split(line, '\t');
    if (f.size() != 6) {
      throw DataError(where + ": expected 6 columns, got " + std::to_string(f.size()));
    }
    Instance inst;
    inst.instance_id = std::string(f[0]);
    inst.lemma = std::string(f[1]);
    inst.language = std::string(f[2]);
    inst.usage_1 = std::string(f[3]);
    inst.usage_2 = std::string(f[4]);
    if (inst.instance_id.empty()) throw DataError(where + ": empty instance_id");
    if (!seen.insert(inst.instance_id).second) {
      throw DataError(where + ": duplicate instance_id '" + inst.instance_id + "'");
    }
    for (auto r : split(f[5], ',')) {
      int value = 0;
      auto [ptr, ec] = std::from_chars(r.data(), r.data() + r.size(), value);
      if (ec != std::errc{} || ptr != r.data() + r.size() || r.empty()) {
        throw DataError(where + ": malformed rating '" + std::string(r) + "' in instance " + inst.instance_id);
      }
      inst.ratings.push_back(value);
    }
    inst.targets = compute_targets(inst.ratings, inst.instance_id);
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<Instance> load_instances(const std::filesystem::path& instances_path) {
  return parse_instances(read_file(instances_path), instances_path.string());
}

Dataset parse_dataset(std::string_view usages_tsv, std::string_view instances_tsv,
                      std::string_view source) {
  Dataset ds;
  const std::string usage_src = std::string(source) + "/usages";
  const std::string inst_src = std::string(source) + "/instances";

  auto usage_lines = lines_of(usages_tsv);
  if (!usage_lines.empty()) {
    expect_header(usage_lines.front().second,
                  {"usage_id", "lemma", "language", "target_start", "target_end", "context"},
                  usage_src);
  }
  for (std::size_t i = 1; i < usage_lines.size(); ++i) {
    const auto [number, line] = usage_lines[i];
    const std::string where = usage_src + ":" + std::to_string(number);
    const auto f = split(line, '\t');
    if (f.size() != 6) {
      throw DataError(where + ": expected 6 columns, got " + std::to_string(f.size()));
    }
    Usage u;
    u.usage_id = std::string(f[0]);
    u.lemma = std::string(f[1]);
    u.language = std::string(f[2]);
    u.target_start = parse_size(f[3], where);
    u.target_end = parse_size(f[4], where);
    u.context = unescape_field(f[5]);
    if (u.usage_id.empty()) throw DataError(where + ": empty usage_id");
    if (!(u.target_start < u.target_end && u.target_end <= utf8_length(u.context))) {
      throw DataError(where + ": target span [" + std::to_string(u.target_start) + ", " +
                      std::to_string(u.target_end) + ") invalid for context of length " +
                      std::to_string(utf8_length(u.context)));
    }
    if (!ds.usage_index.emplace(u.usage_id, ds.usages.size()).second) {
      throw DataError(where + ": duplicate usage_id '" + u.usage_id + "'");
    }
    ds.usages.push_back(std::move(u));
  }

  for (auto& inst : parse_instances(instances_tsv, inst_src)) {
    for (const auto* uid : {&inst.usage_1, &inst.usage_2}) {
      const auto it = ds.usage_index.find(*uid);
      if (it == ds.usage_index.end()) {
        throw DataError(inst_src + ": instance " + inst.instance_id + " references unknown usage '" + *uid + "'");
      }
      if (ds.usages[it->second].lemma != inst.lemma) {
        throw DataError(inst_src + ": instance " + inst.instance_id + " has lemma '" + inst.lemma +
                        "' but usage '" + *uid + "' has lemma '" + ds.usages[it->second].lemma + "'");
      }
    }
    if (!inst.targets.median_label) ++ds.discarded_ogwic;
    if (!inst.targets.mean_disagreement) ++ds.discarded_diswic;
    ds.instances.push_back(std::move(inst));
  }
  return ds;
}

Dataset load_dataset(const std::filesystem::path& usages_path,
                     const std::filesystem::path& instances_path) {
  const auto usages = read_file(usages_path);
  const auto instances = read_file(instances_path);
  return parse_dataset(usages, instances, instances_path.parent_path().string());
}

void write_usages_tsv(const std::filesystem::path& path, std::span<const Usage> usages) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "usage_id\tlemma\tlanguage\ttarget_start\ttarget_end\tcontext\n";
  for (const auto& u : usages) {
    out << u.usage_id << '\t' << u.lemma << '\t' << u.language << '\t' << u.target_start << '\t'
        << u.target_end << '\t' << escape_field(u.context) << '\n';
  }
}

void write_instances_tsv(const std::filesystem::path& path, std::span<const Instance> instances) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "instance_id\tlemma\tlanguage\tusage_1\tusage_2\tratings\n";
  for (const auto& inst : instances) {
    out << inst.instance_id << '\t' << inst.lemma << '\t' << inst.language << '\t' << inst.usage_1
        << '\t' << inst.usage_2 << '\t';
    for (std::size_t i = 0; i < inst.ratings.size(); ++i) out << (i ? "," : "") << inst.ratings[i];
    out << '\n';
  }
}

StatsTable dataset_stats(const Dataset& dataset) {
  struct Acc {
    std::set<std::string> contexts;
    std::set<std::string> lemmas;
    std::size_t words = 0;
    std::size_t ogwic = 0;
    std::size_t diswic = 0;
  };
  std::map<std::string, Acc> acc;
  for (const auto& u : dataset.usages) {
    auto& a = acc[u.language];
    if (a.contexts.insert(u.context).second) a.words += word_count(u.context);
    a.lemmas.insert(u.lemma);
  }
  for (const auto& inst : dataset.instances) {
    auto& a = acc[inst.language];
    if (inst.eligible(Task::ogwic)) ++a.ogwic;
    if (inst.eligible(Task::diswic)) ++a.diswic;
  }

  StatsTable table;
  std::array<double, 5> sums{};
  for (const auto& [lang, a] : acc) {
    LanguageStats s;
    s.unique_contexts = a.contexts.size();
    s.unique_lemmas = a.lemmas.size();
    s.context_length =
        a.contexts.empty()
            ? 0
            : std::lround(static_cast<double>(a.words) / static_cast<double>(a.contexts.size()));
    s.ogwic_instances = a.ogwic;
    s.diswic_instances = a.diswic;
    sums[0] += static_cast<double>(s.unique_contexts);
    sums[1] += static_cast<double>(s.unique_lemmas);
    sums[2] += static_cast<double>(s.context_length);
    sums[3] += static_cast<double>(s.ogwic_instances);
    sums[4] += static_cast<double>(s.diswic_instances);
    table.per_language.emplace(lang, s);
  }
  if (!table.per_language.empty()) {
    const double n = static_cast<double>(table.per_language.size());
    table.average.unique_contexts = static_cast<std::size_t>(std::lround(sums[0] / n));
    table.average.unique_lemmas = static_cast<std::size_t>(std::lround(sums[1] / n));
    table.average.context_length = std::lround(sums[2] / n);
    table.average.ogwic_instances = static_cast<std::size_t>(std::lround(sums[3] / n));
    table.average.diswic_instances = static_cast<std::size_t>(std::lround(sums[4] / n));
  }
  return table;
}

}  // namespace wic
