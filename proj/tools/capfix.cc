// capfix: generate, train, correct, evaluate.
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "capfix/commands.h"
#include "capfix/error.h"

namespace {

constexpr int kExitError = 1;
constexpr int kExitDiverged = 3;

capfix::AppConfig load(const std::string& path, std::optional<std::uint64_t> seed,
                       std::optional<int> threads) {
  auto cfg = capfix::load_config(path);
  if (seed) {
    cfg.generate.seed = *seed;
    cfg.train.training.seed = *seed;
  }
  if (threads) {
    cfg.generate.threads = *threads;
    cfg.train.training.threads = *threads;
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthesize, detect and remove false-repetition errors in captions"};
  app.require_subcommand(1);

  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;

  auto* generate = app.add_subcommand("generate", "Corrupt a clean corpus into labeled splits");
  generate->add_option("--config", config, "Config file")->required()->check(CLI::ExistingFile);
  generate->add_option("--seed", seed, "Override generate.seed");
  generate->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  auto* train = app.add_subcommand("train", "Train the tagger on generated splits");
  train->add_option("--config", config, "Config file")->required()->check(CLI::ExistingFile);
  train->add_option("--seed", seed, "Override train.seed");
  train->add_option("--threads", threads, "Batch shards trained in parallel")
      ->check(CLI::PositiveNumber);

  std::string checkpoint, in_path, out_path, labels_out;
  bool iterate = false;
  auto* correct = app.add_subcommand("correct", "Delete tokens the model labels 0");
  correct->add_option("checkpoint", checkpoint, "Model checkpoint")->required();
  correct->add_option("input", in_path, "Captions JSONL")->required();
  correct->add_option("output", out_path, "Corrected captions JSONL")->required();
  correct->add_flag("--iterate", iterate, "Repeat until nothing changes (at most 3 passes)");
  correct->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  correct->add_option("--labels-out", labels_out, "Write the predicted masks as labeled JSONL");

  std::vector<std::string> files, compare;
  std::string gold, predicted, diagnostics;
  double penalty = 0.9;
  auto* evaluate = app.add_subcommand("evaluate", "Score candidates against references");
  evaluate->add_option("files", files, "CANDIDATES REFERENCES")->expected(0, 2);
  auto* compare_opt = evaluate->add_option("--compare", compare, "BEFORE AFTER REFERENCES")
                          ->expected(3);
  auto* labels_opt = evaluate->add_option("--labels", gold, "Gold labeled JSONL");
  auto* predicted_opt =
      evaluate->add_option("--predicted-labels", predicted, "Predicted labeled JSONL");
  labels_opt->needs(predicted_opt);
  predicted_opt->needs(labels_opt);
  evaluate->add_option("--diagnostics", diagnostics, "Per-sentence CSV output");
  evaluate->add_option("--penalty", penalty, "Fluency penalty factor")
      ->check(CLI::Range(0.0, 1.0));
  compare_opt->excludes(labels_opt);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*generate) {
      std::cout << capfix::cmd_generate(load(config, seed, threads));
    } else if (*train) {
      const auto cfg = load(config, seed, threads);
      const auto result = capfix::cmd_train(cfg, &std::cerr);
      std::cerr << "best epoch " << result.best_epoch << "; checkpoint "
                << cfg.train.checkpoint.string() << "\n";
    } else if (*correct) {
      capfix::CorrectOptions options;
      options.iterate = iterate;
      options.threads = threads.value_or(1);
      if (!labels_out.empty()) options.labels_out = labels_out;
      std::cout << capfix::cmd_correct(checkpoint, in_path, out_path, options) << "\n";
    } else if (*evaluate) {
      if (!compare.empty()) {
        if (!files.empty()) throw capfix::Error("--compare takes no positional files");
        std::cout << capfix::cmd_compare(compare[0], compare[1], compare[2], &std::cerr,
                                         penalty)
                  << "\n";
      } else {
        if (files.size() != 2) {
          throw capfix::Error("evaluate needs CANDIDATES REFERENCES or --compare");
        }
        capfix::EvaluateOptions options;
        options.candidates = files[0];
        options.references = files[1];
        if (!gold.empty()) {
          options.gold_labels = gold;
          options.predicted_labels = predicted;
        }
        if (!diagnostics.empty()) options.diagnostics = diagnostics;
        options.penalty = penalty;
        std::cout << capfix::cmd_evaluate(options) << "\n";
      }
    }
  } catch (const capfix::DivergenceError& e) {
    std::cerr << "capfix: diverged: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "capfix: " << e.what() << "\n";
    return kExitError;
  }
  return 0;
}
