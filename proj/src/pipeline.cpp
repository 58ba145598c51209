#include "wic/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "wic/baselines.hpp"
#include "wic/embedding_store.hpp"
#include "wic/error.hpp"
#include "wic/features.hpp"
#include "wic/metrics.hpp"
#include "wic/neural_io.hpp"

namespace wic {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifest = "manifest.json";
constexpr const char* kPredictions = "predictions.tsv";
constexpr const char* kPooledGroup = "all";

void reject_unknown_keys(const json& object, const std::set<std::string>& allowed, const std::string& where) {
  if (!object.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : object.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown config key '" + where + "." + key + "'");
  }
}

template <typename T>
void read_key(const json& object, const char* key, T& target, const std::string& where) {
  if (!object.contains(key)) return;
  try {
    target = object.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + where + "." + key + "' has the wrong type");
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

Dataset load_split(const ExperimentConfig& config, const std::string& name) {
  const auto& paths = config.split(name);
  return load_dataset(paths.usages, paths.instances);
}

EmbeddingStore load_store(const ExperimentConfig& config) {
  if (config.embeddings.empty()) throw ConfigError("config needs 'embeddings' for this command");
  return read_store(config.embeddings);
}

// Row indices per training group: one pooled group, or one per language (sorted).
std::map<std::string, std::vector<Eigen::Index>> group_rows(const TaskData& data, bool per_language) {
  std::map<std::string, std::vector<Eigen::Index>> groups;
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    groups[per_language ? data.languages[static_cast<std::size_t>(r)] : kPooledGroup].push_back(r);
  }
  return groups;
}

std::vector<int> as_labels(const Eigen::VectorXd& v) {
  std::vector<int> out(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) out[static_cast<std::size_t>(i)] = static_cast<int>(std::lround(v[i]));
  return out;
}

nn::NetworkConfig network_config(const ExperimentConfig& config, Eigen::Index dim) {
  nn::NetworkConfig net;
  net.architecture = config.method == Method::adapter ? nn::Architecture::adapter : nn::Architecture::linear_head;
  net.task = config.task;
  net.dim = dim;
  net.bottleneck = config.bottleneck;
  net.hidden = config.hidden;
  net.dropout = config.dropout;
  return net;
}

json train_group(const ExperimentConfig& config, const TaskData& train, const TaskData* dev, const fs::path& dir,
                 std::ostream& log) {
  fs::create_directories(dir);
  json files = json::array();
  switch (config.method) {
    case Method::baseline: {
      if (config.task == Task::ogwic) {
        const auto sims = cosine_rows(train.e1, train.e2);
        const auto fit = optimize_bins(std::span<const double>(sims.data(), static_cast<std::size_t>(sims.size())),
                                       as_labels(train.targets));
        write_text(dir / "bins.json", to_json(fit));
        log << "  bins t=(" << fit.thresholds.t1 << ", " << fit.thresholds.t2 << ", " << fit.thresholds.t3
            << "), training alpha " << fit.alpha << '\n';
        files.push_back("bins.json");
      } else {
        const auto model = fit_linreg(concat_rows<double>(train.e1, train.e2), train.targets, config.ridge_lambda);
        write_text(dir / "linreg.json", to_json(model));
        files.push_back("linreg.json");
      }
      break;
    }
    case Method::xlmr:
    case Method::adapter: {
      nn::Network<float> net(network_config(config, train.dimension()), config.seed);
      nn::TrainConfig tc = config.neural;
      tc.seed = config.seed;
      const auto history = nn::train(net, train, dev, tc);
      nn::save_checkpoint(net, tc, dir / "network.wicm");
      nn::write_training_log(dir / "train_log.tsv", history);
      if (!history.empty()) log << "  final training loss " << history.back().train_loss << '\n';
      files.push_back("network.wicm");
      files.push_back("train_log.tsv");
      break;
    }
    case Method::ensemble: {
      const Eigen::MatrixXf X = enrich_rows<float>(train.e1, train.e2);
      auto c_cfg = config.gbdt_c;
      auto x_cfg = config.gbdt_x;
      c_cfg.seed = x_cfg.seed = config.seed;
      gbdt::save_model(gbdt::fit_gbdt(X, train.targets, config.task, c_cfg), dir / "gbdt_c.wict");
      gbdt::save_model(gbdt::fit_gbdt(X, train.targets, config.task, x_cfg), dir / "gbdt_x.wict");
      files.push_back("gbdt_c.wict");
      files.push_back("gbdt_x.wict");
      break;
    }
  }
  return files;
}

Eigen::VectorXd predict_group(Method method, Task task, const TaskData& data, const fs::path& dir) {
  switch (method) {
    case Method::baseline: {
      if (task == Task::ogwic) {
        const auto fit = bin_fit_from_json(read_text(dir / "bins.json"));
        const auto sims = cosine_rows(data.e1, data.e2);
        Eigen::VectorXd out(sims.size());
        for (Eigen::Index i = 0; i < sims.size(); ++i) out[i] = apply_bins(sims[i], fit.thresholds);
        return out;
      }
      const auto model = linear_model_from_json(read_text(dir / "linreg.json"));
      return predict_linreg(model, concat_rows<double>(data.e1, data.e2));
    }
    case Method::xlmr:
    case Method::adapter: {
      auto loaded = nn::load_checkpoint(dir / "network.wicm");
      if (loaded.network.config().task != task) throw DataError("checkpoint task does not match config task");
      if (loaded.network.config().dim != data.dimension()) {
        throw DataError("checkpoint expects dimension " + std::to_string(loaded.network.config().dim) +
                        ", embeddings have " + std::to_string(data.dimension()));
      }
      return nn::predict(loaded.network, data);
    }
    case Method::ensemble: {
      const auto c = gbdt::load_model(dir / "gbdt_c.wict");
      const auto x = gbdt::load_model(dir / "gbdt_x.wict");
      const Eigen::MatrixXf X = enrich_rows<float>(data.e1, data.e2);
      if (X.cols() != c.n_features || X.cols() != x.n_features) {
        throw DataError("tree models expect " + std::to_string(c.n_features) + " features, embeddings give " +
                        std::to_string(X.cols()));
      }
      if (task == Task::ogwic) {
        const auto labels = combine_labels(gbdt::predict_gbdt(c, X), gbdt::predict_gbdt(x, X));
        Eigen::VectorXd out(static_cast<Eigen::Index>(labels.size()));
        for (std::size_t i = 0; i < labels.size(); ++i) out[static_cast<Eigen::Index>(i)] = labels[i];
        return out;
      }
      return combine_scores(gbdt::predict_gbdt(c, X).col(0), gbdt::predict_gbdt(x, X).col(0));
    }
  }
  throw std::logic_error("unhandled method");
}

std::string format_score(const std::optional<double>& v) {
  if (!v) return "undef";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", *v);
  return buf;
}

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::baseline: return "baseline";
    case Method::xlmr: return "xlmr";
    case Method::adapter: return "adapter";
    case Method::ensemble: return "ensemble";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  if (name == "baseline") return Method::baseline;
  if (name == "xlmr") return Method::xlmr;
  if (name == "adapter") return Method::adapter;
  if (name == "ensemble") return Method::ensemble;
  throw ConfigError("unknown method '" + std::string(name) + "' (expected baseline, xlmr, adapter or ensemble)");
}

const SplitPaths& ExperimentConfig::split(const std::string& name) const {
  const auto it = data.find(name);
  if (it == data.end()) throw ConfigError("config has no data split '" + name + "'");
  return it->second;
}

ExperimentConfig parse_config(const std::string& json_text, const fs::path& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown_keys(root,
                      {"data", "embeddings", "output_dir", "task", "method", "seed", "per_language", "train_split",
                       "dev_split", "predict_split", "stats_split", "density_split", "neural", "gbdt", "baseline",
                       "density"},
                      "config");
  ExperimentConfig cfg;
  if (!root.contains("task")) throw ConfigError("config needs 'task' (ogwic or diswic)");
  if (!root.contains("method")) throw ConfigError("config needs 'method'");
  std::string text;
  read_key(root, "task", text, "config");
  cfg.task = parse_task(text);
  read_key(root, "method", text, "config");
  cfg.method = parse_method(text);

  if (root.contains("data")) {
    const auto& data = root.at("data");
    if (!data.is_object()) throw ConfigError("config.data must be an object of splits");
    for (const auto& [name, split] : data.items()) {
      const std::string where = "config.data." + name;
      reject_unknown_keys(split, {"usages", "instances"}, where);
      std::string usages, instances;
      read_key(split, "usages", usages, where);
      read_key(split, "instances", instances, where);
      if (usages.empty() || instances.empty()) throw ConfigError(where + " needs 'usages' and 'instances'");
      cfg.data[name] = {resolve(base_dir, usages), resolve(base_dir, instances)};
    }
  }
  if (root.contains("embeddings")) {
    read_key(root, "embeddings", text, "config");
    cfg.embeddings = resolve(base_dir, text);
  }
  text = cfg.output_dir.string();
  read_key(root, "output_dir", text, "config");
  cfg.output_dir = resolve(base_dir, text);
  read_key(root, "seed", cfg.seed, "config");
  read_key(root, "per_language", cfg.per_language, "config");
  read_key(root, "train_split", cfg.train_split, "config");
  read_key(root, "dev_split", cfg.dev_split, "config");
  read_key(root, "predict_split", cfg.predict_split, "config");
  read_key(root, "stats_split", cfg.stats_split, "config");
  read_key(root, "density_split", cfg.density_split, "config");

  if (root.contains("neural")) {
    const auto& n = root.at("neural");
    reject_unknown_keys(n,
                        {"epochs", "learning_rate", "batch_size", "dropout", "weight_decay", "beta1", "beta2", "eps",
                         "bottleneck", "hidden"},
                        "config.neural");
    read_key(n, "epochs", cfg.neural.epochs, "config.neural");
    read_key(n, "batch_size", cfg.neural.batch_size, "config.neural");
    read_key(n, "learning_rate", cfg.neural.optimizer.learning_rate, "config.neural");
    read_key(n, "weight_decay", cfg.neural.optimizer.weight_decay, "config.neural");
    read_key(n, "beta1", cfg.neural.optimizer.beta1, "config.neural");
    read_key(n, "beta2", cfg.neural.optimizer.beta2, "config.neural");
    read_key(n, "eps", cfg.neural.optimizer.eps, "config.neural");
    read_key(n, "dropout", cfg.dropout, "config.neural");
    read_key(n, "bottleneck", cfg.bottleneck, "config.neural");
    read_key(n, "hidden", cfg.hidden, "config.neural");
  }
  if (root.contains("gbdt")) {
    const auto& g = root.at("gbdt");
    reject_unknown_keys(g, {"learning_rate", "max_depth", "n_rounds", "colsample_c", "colsample_x", "min_samples_leaf"},
                        "config.gbdt");
    for (auto* member : {&cfg.gbdt_c, &cfg.gbdt_x}) {
      read_key(g, "learning_rate", member->learning_rate, "config.gbdt");
      read_key(g, "max_depth", member->max_depth, "config.gbdt");
      read_key(g, "n_rounds", member->n_rounds, "config.gbdt");
      read_key(g, "min_samples_leaf", member->min_samples_leaf, "config.gbdt");
    }
    read_key(g, "colsample_c", cfg.gbdt_c.colsample, "config.gbdt");
    read_key(g, "colsample_x", cfg.gbdt_x.colsample, "config.gbdt");
  }
  if (root.contains("baseline")) {
    reject_unknown_keys(root.at("baseline"), {"ridge_lambda"}, "config.baseline");
    read_key(root.at("baseline"), "ridge_lambda", cfg.ridge_lambda, "config.baseline");
  }
  if (root.contains("density")) {
    reject_unknown_keys(root.at("density"), {"bins"}, "config.density");
    read_key(root.at("density"), "bins", cfg.density_bins, "config.density");
  }

  if (cfg.neural.epochs < 0 || cfg.neural.batch_size <= 0 || !(cfg.neural.optimizer.learning_rate >= 0.0) ||
      !(cfg.dropout >= 0.0 && cfg.dropout < 1.0) || cfg.bottleneck <= 0) {
    throw ConfigError("invalid neural hyperparameters");
  }
  for (const auto* g : {&cfg.gbdt_c, &cfg.gbdt_x}) {
    if (!(g->learning_rate > 0.0) || g->max_depth < 0 || g->n_rounds < 0 || !(g->colsample > 0.0 && g->colsample <= 1.0) ||
        g->min_samples_leaf < 1) {
      throw ConfigError("invalid gbdt hyperparameters");
    }
  }
  if (cfg.ridge_lambda < 0.0) throw ConfigError("ridge_lambda must be non-negative");
  if (cfg.density_bins < 1) throw ConfigError("density bins must be positive");
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.parent_path());
}

ExperimentConfig resolve_config(const CliOptions& options) {
  auto cfg = load_config(options.config);
  if (options.seed) cfg.seed = *options.seed;
  if (options.per_language) cfg.per_language = true;
  return cfg;
}

void cmd_stats(const ExperimentConfig& config, const std::optional<std::string>& split, std::ostream& out,
               std::ostream& log) {
  const std::string name = split.value_or(config.stats_split);
  const auto ds = load_split(config, name);
  const auto table = dataset_stats(ds);
  log << "loaded " << ds.instances.size() << " instances; " << ds.discarded_ogwic
      << " without an integral median, " << ds.discarded_diswic << " with fewer than 2 ratings\n";

  fs::create_directories(config.output_dir);
  std::ofstream tsv(config.output_dir / ("stats_" + name + ".tsv"), std::ios::binary | std::ios::trunc);
  if (!tsv) throw DataError("cannot write stats table to " + config.output_dir.string());
  tsv << "language\tunique_contexts\tunique_lemmas\tcontext_length\togwic_instances\tdiswic_instances\n";
  auto row = [](std::ostream& o, const std::string& lang, const LanguageStats& s) {
    o << lang << '\t' << s.unique_contexts << '\t' << s.unique_lemmas << '\t' << s.context_length << '\t'
      << s.ogwic_instances << '\t' << s.diswic_instances << '\n';
  };
  if (!table.per_language.empty()) row(tsv, "AVG", table.average);
  for (const auto& [lang, s] : table.per_language) row(tsv, lang, s);

  std::vector<std::pair<std::string, const LanguageStats*>> columns;
  if (!table.per_language.empty()) columns.emplace_back("AVG", &table.average);
  for (const auto& [lang, s] : table.per_language) columns.emplace_back(lang, &s);
  out << std::left << std::setw(18) << ("[" + name + "]");
  for (const auto& [lang, s] : columns) out << std::right << std::setw(10) << lang;
  out << '\n';
  auto line = [&](const char* label, auto getter) {
    out << std::left << std::setw(18) << label;
    for (const auto& [lang, s] : columns) out << std::right << std::setw(10) << getter(*s);
    out << '\n';
  };
  line("Unique contexts", [](const LanguageStats& s) { return s.unique_contexts; });
  line("Unique lemmas", [](const LanguageStats& s) { return s.unique_lemmas; });
  line("Context length", [](const LanguageStats& s) { return s.context_length; });
  line("OGWiC instances", [](const LanguageStats& s) { return s.ogwic_instances; });
  line("DisWiC instances", [](const LanguageStats& s) { return s.diswic_instances; });
}

void cmd_train(const ExperimentConfig& config, std::ostream& out, std::ostream& log) {
  const auto train_ds = load_split(config, config.train_split);
  const auto store = load_store(config);
  const TaskData train = join(train_ds, config.task, store);
  if (train.rows() == 0) throw DataError("no " + std::string(to_string(config.task)) + " instances in the training split");
  std::optional<TaskData> dev;
  if (config.data.contains(config.dev_split) && config.dev_split != config.train_split) {
    dev = join(load_split(config, config.dev_split), config.task, store);
  }

  const fs::path model_dir = config.output_dir / "model";
  fs::create_directories(model_dir);
  json manifest;
  manifest["task"] = std::string(to_string(config.task));
  manifest["method"] = std::string(to_string(config.method));
  manifest["per_language"] = config.per_language;
  manifest["seed"] = config.seed;
  manifest["dimension"] = store.dimension();
  manifest["groups"] = json::object();
  if (config.method == Method::ensemble) {
    manifest["ensemble_weights"] =
        config.task == Task::ogwic
            ? json{{"c", EnsembleWeights::ogwic_c}, {"x", EnsembleWeights::ogwic_x}, {"rule", "argmax of weighted probabilities"}}
            : json{{"c", EnsembleWeights::diswic_c}, {"x", EnsembleWeights::diswic_x}, {"rule", "weighted sum of scores"}};
    manifest["colsample"] = {{"c", config.gbdt_c.colsample}, {"x", config.gbdt_x.colsample}};
  }

  const auto groups = group_rows(train, config.per_language);
  const auto dev_groups = dev ? group_rows(*dev, config.per_language) : decltype(groups){};
  for (const auto& [group, rows] : groups) {
    log << "training " << to_string(config.method) << " (" << to_string(config.task) << ") on group '" << group
        << "': " << rows.size() << " instances\n";
    const TaskData subset = train.subset(rows);
    std::optional<TaskData> dev_subset;
    if (const auto it = dev_groups.find(group); it != dev_groups.end()) dev_subset = dev->subset(it->second);
    manifest["groups"][group] =
        train_group(config, subset, dev_subset ? &*dev_subset : nullptr, model_dir / group, log);
  }
  write_text(config.output_dir / kManifest, manifest.dump(2) + "\n");
  out << "wrote " << (config.output_dir / kManifest).string() << '\n';
}

void cmd_predict(const ExperimentConfig& config, std::ostream& out, std::ostream& log) {
  json manifest;
  try {
    manifest = json::parse(read_text(config.output_dir / kManifest));
  } catch (const json::exception& e) {
    throw DataError("invalid model manifest: " + std::string(e.what()));
  }
  const Task task = parse_task(manifest.at("task").get<std::string>());
  const Method method = parse_method(manifest.at("method").get<std::string>());
  const bool per_language = manifest.at("per_language").get<bool>();
  if (task != config.task || method != config.method) {
    throw ConfigError("trained model is " + manifest.at("method").get<std::string>() + "/" +
                      manifest.at("task").get<std::string>() + " but config asks for " +
                      std::string(to_string(config.method)) + "/" + std::string(to_string(config.task)));
  }

  const auto ds = load_split(config, config.predict_split);
  const auto store = load_store(config);
  if (store.dimension() != manifest.at("dimension").get<std::uint32_t>()) {
    throw DataError("embedding dimension " + std::to_string(store.dimension()) + " differs from the trained model's " +
                    std::to_string(manifest.at("dimension").get<std::uint32_t>()));
  }
  const TaskData data = join(ds, task, store);
  Eigen::VectorXd predictions(data.rows());
  for (const auto& [group, rows] : group_rows(data, per_language)) {
    if (!manifest.at("groups").contains(group)) {
      throw DataError("no trained model for language '" + group + "'");
    }
    const auto values = predict_group(method, task, data.subset(rows), config.output_dir / "model" / group);
    for (std::size_t i = 0; i < rows.size(); ++i) predictions[rows[i]] = values[static_cast<Eigen::Index>(i)];
  }

  const fs::path path = config.output_dir / kPredictions;
  std::FILE* file = std::fopen(path.string().c_str(), "wb");
  if (!file) throw DataError("cannot write " + path.string());
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    if (task == Task::ogwic) {
      std::fprintf(file, "%s\t%d\n", data.ids[static_cast<std::size_t>(r)].c_str(), static_cast<int>(std::lround(predictions[r])));
    } else {
      std::fprintf(file, "%s\t%.6f\n", data.ids[static_cast<std::size_t>(r)].c_str(), predictions[r]);
    }
  }
  std::fclose(file);
  log << "predicted " << data.rows() << " instances of split '" << config.predict_split << "'\n";
  out << "wrote " << path.string() << '\n';
}

std::vector<std::pair<std::string, double>> read_predictions(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open predictions " + path.string());
  std::vector<std::pair<std::string, double>> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw DataError(path.string() + ":" + std::to_string(number) + ": expected 'instance_id<TAB>prediction'");
    }
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(line.substr(tab + 1), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != line.size() - tab - 1 || !std::isfinite(value)) {
      throw DataError(path.string() + ":" + std::to_string(number) + ": malformed prediction '" + line.substr(tab + 1) + "'");
    }
    out.emplace_back(line.substr(0, tab), value);
  }
  return out;
}

EvaluationReport evaluate_predictions(Task task, const std::vector<Instance>& gold,
                                      const std::vector<std::pair<std::string, double>>& predictions) {
  std::map<std::string, double> pred;
  for (const auto& [id, value] : predictions) {
    if (!pred.emplace(id, value).second) throw DataError("duplicate prediction for instance '" + id + "'");
    if (task == Task::ogwic && (value != std::round(value) || value < 1 || value > kNumLabels)) {
      throw DataError("OGWiC prediction for '" + id + "' is not a label in 1..4");
    }
  }
  std::vector<std::string> missing;
  std::size_t matched = 0;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_language;
  std::vector<double> all_gold, all_pred;
  for (const auto& inst : gold) {
    if (!inst.eligible(task)) continue;
    const auto it = pred.find(inst.instance_id);
    if (it == pred.end()) {
      missing.push_back(inst.instance_id);
      continue;
    }
    ++matched;
    auto& [g, p] = by_language[inst.language];
    g.push_back(inst.target(task));
    p.push_back(it->second);
    all_gold.push_back(inst.target(task));
    all_pred.push_back(it->second);
  }
  if (!missing.empty() || matched != pred.size()) {
    std::string msg = "prediction ids do not match gold: " + std::to_string(missing.size()) + " gold instance(s) without prediction";
    for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 10); ++i) msg += " " + missing[i];
    msg += "; " + std::to_string(pred.size() - matched) + " prediction(s) without gold";
    throw DataError(msg);
  }

  auto score = [task](const std::vector<double>& g, const std::vector<double>& p) -> std::optional<double> {
    try {
      if (task == Task::ogwic) {
        std::vector<int> gi(g.begin(), g.end()), pi(p.size());
        std::transform(p.begin(), p.end(), pi.begin(), [](double v) { return static_cast<int>(std::lround(v)); });
        return krippendorff_alpha_ordinal(gi, pi);
      }
      return spearman_rho(g, p);
    } catch (const UndefinedMetric&) {
      return std::nullopt;
    }
  };

  EvaluationReport report;
  report.task = task;
  double sum = 0.0;
  std::size_t defined = 0;
  for (const auto& [language, series] : by_language) {
    LanguageScore s{language, series.first.size(), score(series.first, series.second)};
    if (s.score) {
      sum += *s.score;
      ++defined;
    }
    report.per_language.push_back(s);
  }
  if (defined > 0) report.average = sum / static_cast<double>(defined);
  if (!all_gold.empty()) report.pooled = score(all_gold, all_pred);
  return report;
}

void cmd_evaluate(const ExperimentConfig& config, const std::optional<fs::path>& gold_path,
                  const std::optional<fs::path>& pred_path, std::ostream& out, std::ostream& log) {
  const fs::path gold_file = gold_path ? *gold_path : config.split(config.predict_split).instances;
  const fs::path pred_file = pred_path ? *pred_path : config.output_dir / kPredictions;
  const auto gold = load_instances(gold_file);
  const auto report = evaluate_predictions(config.task, gold, read_predictions(pred_file));

  const char* metric = config.task == Task::ogwic ? "Krippendorff's alpha (ordinal)" : "Spearman's rho";
  out << to_string(config.task) << " (" << metric << ")\n";
  out << std::left << std::setw(8) << "" << std::right << std::setw(8) << "AVG";
  for (const auto& s : report.per_language) out << std::setw(8) << s.language;
  out << '\n' << std::left << std::setw(8) << "score" << std::right << std::setw(8) << format_score(report.average);
  for (const auto& s : report.per_language) out << std::setw(8) << format_score(s.score);
  out << '\n' << std::left << std::setw(8) << "n" << std::right << std::setw(8) << "";
  for (const auto& s : report.per_language) out << std::setw(8) << s.count;
  out << "\npooled: " << format_score(report.pooled) << '\n';

  json j;
  j["task"] = std::string(to_string(config.task));
  j["metric"] = config.task == Task::ogwic ? "krippendorff_alpha_ordinal" : "spearman_rho";
  j["per_language"] = json::object();
  for (const auto& s : report.per_language) {
    j["per_language"][s.language] = s.score ? json(*s.score) : json("undefined");
    if (!s.score) log << "warning: metric undefined for language '" << s.language << "'; excluded from AVG\n";
  }
  j["average"] = report.average ? json(*report.average) : json("undefined");
  j["pooled"] = report.pooled ? json(*report.pooled) : json("undefined");
  fs::create_directories(config.output_dir);
  write_text(config.output_dir / "evaluation.json", j.dump(2) + "\n");

  if (!report.average) throw UndefinedMetric("metric undefined for every language");
}

DensityTable similarity_densities(std::span<const double> similarities, std::span<const int> labels, int bins) {
  if (similarities.size() != labels.size()) throw ShapeError("similarity/label lengths differ");
  if (bins < 1) throw std::invalid_argument("need at least one bin");
  if (similarities.empty()) throw DataError("no instances to histogram");
  DensityTable table;
  table.bins = bins;
  const auto [lo, hi] = std::minmax_element(similarities.begin(), similarities.end());
  table.lo = *lo;
  table.hi = *hi;
  if (table.hi == table.lo) {
    table.lo -= 0.5;
    table.hi += 0.5;
  }
  const double width = table.bin_width();
  for (int label = 1; label <= kNumLabels; ++label) {
    DensityCurve curve{label, 0, std::vector<double>(static_cast<std::size_t>(bins), 0.0)};
    for (std::size_t i = 0; i < similarities.size(); ++i) {
      if (labels[i] != label) continue;
      auto bin = static_cast<int>((similarities[i] - table.lo) / width);
      bin = std::clamp(bin, 0, bins - 1);
      curve.density[static_cast<std::size_t>(bin)] += 1.0;
      ++curve.count;
    }
    if (curve.count == 0) {
      table.empty_labels.push_back(label);
      continue;
    }
    for (auto& d : curve.density) d /= static_cast<double>(curve.count) * width;
    table.curves.push_back(std::move(curve));
  }
  return table;
}

void cmd_plot_density(const ExperimentConfig& config, const std::optional<std::string>& split, std::ostream& out,
                      std::ostream& log) {
  const std::string name = split.value_or(config.density_split);
  const auto ds = load_split(config, name);
  const TaskData data = join(ds, Task::ogwic, load_store(config));
  const auto sims = cosine_rows(data.e1, data.e2);
  const auto table = similarity_densities(std::span<const double>(sims.data(), static_cast<std::size_t>(sims.size())),
                                          as_labels(data.targets), config.density_bins);
  for (int label : table.empty_labels) log << "warning: no instances with median label " << label << "; omitted\n";

  fs::create_directories(config.output_dir);
  const fs::path path = config.output_dir / ("density_" + name + ".csv");
  std::FILE* file = std::fopen(path.string().c_str(), "wb");
  if (!file) throw DataError("cannot write " + path.string());
  std::fputs("label,bin_start,bin_end,density\n", file);
  for (const auto& curve : table.curves) {
    for (int b = 0; b < table.bins; ++b) {
      std::fprintf(file, "%d,%.9g,%.9g,%.9g\n", curve.label, table.lo + b * table.bin_width(),
                   table.lo + (b + 1) * table.bin_width(), curve.density[static_cast<std::size_t>(b)]);
    }
  }
  std::fclose(file);
  out << "wrote " << path.string() << '\n';
}

int run_command(const std::string& command, const CliOptions& options, std::ostream& out, std::ostream& log) {
  try {
    const auto config = resolve_config(options);
    if (command == "stats") {
      cmd_stats(config, options.split, out, log);
    } else if (command == "train") {
      cmd_train(config, out, log);
    } else if (command == "predict") {
      cmd_predict(config, out, log);
    } else if (command == "evaluate") {
      cmd_evaluate(config, options.gold, options.pred, out, log);
    } else if (command == "plot-density") {
      cmd_plot_density(config, options.split, out, log);
    } else {
      log << "error: unknown command '" << command << "'\n";
      return kExitDataError;
    }
    return kExitOk;
  } catch (const UndefinedMetric& e) {
    log << "error: " << e.what() << '\n';
    return kExitUndefinedMetric;
  } catch (const DataError& e) {
    log << "error: " << e.what() << '\n';
    return kExitDataError;
  } catch (const json::exception& e) {
    log << "error: malformed artifact: " << e.what() << '\n';
    return kExitDataError;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace wic
