#include <iostream>

#include "CLI11.hpp"

#include "wic/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Word-in-Context disagreement: train, predict and evaluate"};
  app.require_subcommand(1);

  wic::CliOptions options;
  std::uint64_t seed = 0;
  std::string gold, pred, split;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", options.config, "experiment config (JSON)")->required();
    sub->add_flag("--per-language", options.per_language, "one model per language instead of a pooled model");
    sub->add_option("--seed", seed, "override the config seed");
  };
  auto* stats = app.add_subcommand("stats", "per-language dataset statistics");
  auto* train = app.add_subcommand("train", "train the configured method");
  auto* predict = app.add_subcommand("predict", "write predictions for the predict split");
  auto* evaluate = app.add_subcommand("evaluate", "score predictions against gold");
  auto* density = app.add_subcommand("plot-density", "similarity densities per median label");
  for (auto* sub : {stats, train, predict, evaluate, density}) add_common(sub);
  for (auto* sub : {stats, density}) sub->add_option("--split", split, "split name from the config");
  evaluate->add_option("--gold", gold, "gold instances TSV");
  evaluate->add_option("--pred", pred, "predictions TSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  for (auto* sub : app.get_subcommands()) {
    auto given = [sub](const char* name) {
      const auto* opt = sub->get_option_no_throw(name);
      return opt != nullptr && opt->count() > 0;
    };
    if (given("--seed")) options.seed = seed;
    if (given("--split")) options.split = split;
    if (given("--gold")) options.gold = gold;
    if (given("--pred")) options.pred = pred;
    return wic::run_command(sub->get_name(), options, std::cout, std::cerr);
  }
  return wic::kExitFailure;
}
