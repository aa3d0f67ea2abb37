// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "capfix/commands.h"
#include "capfix/config.h"
#include "capfix/corrector.h"
#include "capfix/corruptor.h"
#include "capfix/metrics.h"
#include "capfix/neural/checkpoint.h"
#include "capfix/neural/trainer.h"
#include "json.hpp"
#include "support/gradcheck.h"
#include "support/metric_oracles.h"
#include "support/temp_dir.h"

namespace fs = std::filesystem;
using namespace capfix;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Context {
  fs::path source_dir;
  fs::path work;
  bool full = true;
  fs::path config;
  // Filled by criterion 1.
  std::optional<AppConfig> trained_config;
};

std::vector<Caption> sample_corpus(const Context& ctx) {
  return load_captions(ctx.source_dir / "data/sample_captions.jsonl");
}

// 1. Classifier quality at desk scale.
Outcome classifier_quality(Context& ctx) {
  AppConfig cfg = load_config(ctx.config);
  cfg.generate.output_dir = ctx.work / "desk";
  cfg.train.data_dir = cfg.generate.output_dir;
  cfg.train.checkpoint = cfg.generate.output_dir / "model.ckpt";
  cfg.train.log = cfg.generate.output_dir / "train_log.csv";

  const auto corpus = load_captions(cfg.generate.input);
  const auto manifest = nlohmann::json::parse(cmd_generate(cfg));
  const auto pairs = manifest["counts"]["total"]["pairs"].get<std::size_t>();
  std::cout << "  config " << ctx.config.string() << "\n  corpus " << corpus.size() << " sentences, " << pairs << " pairs\n";

  const auto start = Clock::now();
  const auto result = cmd_train(cfg, &std::cout);
  const double minutes = seconds_since(start) / 60;
  ctx.trained_config = cfg;

  const auto test = load_labeled(cfg.train.data_dir / kTestFile);
  const auto m = neural::evaluate_labels(result.params, result.vocab, test);
  const bool ok = corpus.size() >= 5000 && pairs >= 30000 && m.accuracy >= 0.99 &&
                  m.macro_f1 >= 0.98;
  return {ok, "held-out accuracy " + fmt("%.2f", 100 * m.accuracy) + " (>= 99.0), macro-F1 " +
                  fmt("%.2f", 100 * m.macro_f1) + " (>= 98.0); best epoch " +
                  std::to_string(result.best_epoch) + "; training time " +
                  fmt("%.1f", minutes) + " min (expected <= 45 min on one core)"};
}

// 2. Mask recovery over randomized generations.
Outcome mask_recovery(Context& ctx) {
  const auto start = Clock::now();
  const auto corpus = sample_corpus(ctx);
  std::map<RuleKind, std::size_t> per_rule;
  std::size_t generated = 0, failures = 0;
  std::mt19937_64 config_rng(2024);
  for (std::uint64_t seed = 1; generated < 100000; ++seed) {
    // Alternate the default rules with randomized parameterizations.
    RuleConfig cfg;
    if (seed % 2 == 0) {
      cfg.conjunctions = {{"and"}, {"while"}, {"as"}, {"and", "then"}, {"followed", "by"}};
      cfg.partial_min_len = 2 + config_rng() % 3;
      cfg.partial_max_len = cfg.partial_min_len + config_rng() % 5;
      cfg.clean_pairs_per_sentence = 1 + config_rng() % 2;
    }
    for (const auto& caption : corpus) {
      for (const auto& pair : corrupt_sentence(caption, cfg, seed)) {
        if (!pair.rule) {
          if (pair.tokens != caption.tokens ||
              std::count(pair.labels.begin(), pair.labels.end(), 0) != 0) {
            ++failures;
          }
          continue;
        }
        ++generated;
        ++per_rule[*pair.rule];
        if (kept_tokens(pair) != caption.tokens || pair.labels.size() != pair.tokens.size()) {
          ++failures;
        }
      }
    }
  }
  const double secs = seconds_since(start);
  std::string counts;
  for (auto [rule, n] : per_rule) counts += " " + std::string(rule_name(rule)) + "=" + std::to_string(n);
  const bool ok = failures == 0 && generated >= 100000 && per_rule.size() == 5 && secs <= 60;
  return {ok, std::to_string(generated) + " corrupted pairs, " + std::to_string(failures) +
                  " violations;" + counts + "; " + fmt("%.1f", secs) + " s (<= 60 s)"};
}

// 3. Full-model gradient check on random tiny instances.
Outcome gradient_check(Context&) {
  const auto start = Clock::now();
  std::mt19937_64 gen(77);
  auto pick = [&](std::size_t lo, std::size_t hi) { return lo + gen() % (hi - lo + 1); };
  double worst = 0, worst_abs = 0;
  std::string worst_where;
  const int instances = 24;
  for (int k = 0; k < instances; ++k) {
    const neural::ModelDims dims{pick(3, 10), pick(1, 4), pick(1, 3)};
    Rng rng(gen());
    neural::ModelParameters p = neural::init_parameters(dims, rng);
    for (auto& block : neural::parameter_blocks(p)) {
      for (double& v : block.values) v += 0.5 * (2 * uniform_real(rng) - 1);
    }
    const std::size_t batch_size = pick(1, 3);
    std::vector<std::vector<int>> seqs;
    std::vector<Labels> labels;
    for (std::size_t b = 0; b < batch_size; ++b) {
      const std::size_t len = pick(1, 6);
      std::vector<int> s;
      Labels l;
      for (std::size_t t = 0; t < len; ++t) {
        s.push_back(static_cast<int>(pick(1, dims.vocab - 1)));
        l.push_back(static_cast<std::uint8_t>(gen() % 2));
      }
      seqs.push_back(s);
      labels.push_back(l);
    }
    const double dropout = k % 2 ? 0.3 : 0.0;
    const auto batch = neural::make_batch(seqs, labels);
    const auto r = testing::check_gradients(p, batch, dropout, gen());
    worst_abs = std::max(worst_abs, r.max_abs_error);
    if (r.max_rel_error > worst) {
      worst = r.max_rel_error;
      worst_where = r.worst_block + " (analytic " + fmt("%.6e", r.worst_analytic) +
                    ", numeric " + fmt("%.6e", r.worst_numeric) + ")";
    }
  }
  const double secs = seconds_since(start);
  return {worst <= 1e-4 && secs <= 60,
          std::to_string(instances) + " instances, max relative error " + fmt("%.2e", worst) +
              " at " + worst_where + " (<= 1e-4, denominator floor " +
              fmt("%.0e", testing::kRelFloor) + "); max absolute error " + fmt("%.2e", worst_abs) +
              "; " + fmt("%.1f", secs) + " s (<= 60 s)"};
}

struct TestFiles {
  fs::path corrupted, clean, references;
  std::vector<Tokens> corrupted_truth;  // clean originals of the corrupted captions
  std::vector<Tokens> clean_inputs;
};

TestFiles write_test_files(const Context& ctx) {
  const auto test = load_labeled(ctx.trained_config->train.data_dir / kTestFile);
  TestFiles files;
  files.corrupted = ctx.work / "test_corrupted.jsonl";
  files.clean = ctx.work / "test_clean.jsonl";
  files.references = ctx.work / "test_references.jsonl";
  std::vector<Caption> corrupted, clean;
  std::vector<ReferenceSet> refs;
  std::map<std::string, int> seen;
  for (const auto& pair : test) {
    const std::string id = pair.source_id + "#" + std::to_string(seen[pair.source_id]++);
    if (pair.rule) {
      corrupted.push_back({id, pair.tokens});
      refs.push_back({id, {kept_tokens(pair)}});
      files.corrupted_truth.push_back(kept_tokens(pair));
    } else {
      clean.push_back({id, pair.tokens});
      files.clean_inputs.push_back(pair.tokens);
    }
  }
  save_captions(files.corrupted, corrupted);
  save_captions(files.clean, clean);
  save_references(files.references, refs);
  return files;
}

// 4. End-to-end correction fidelity.
Outcome correction_fidelity(Context& ctx) {
  const TestFiles files = write_test_files(ctx);
  const fs::path ckpt = ctx.trained_config->train.checkpoint;
  const auto fixed_path = ctx.work / "test_corrected.jsonl";
  const auto clean_out = ctx.work / "test_clean_corrected.jsonl";
  cmd_correct(ckpt, files.corrupted, fixed_path);
  cmd_correct(ckpt, files.clean, clean_out);

  const auto fixed = load_captions(fixed_path);
  std::size_t exact = 0;
  for (std::size_t i = 0; i < fixed.size(); ++i) exact += fixed[i].tokens == files.corrupted_truth[i];
  const auto clean_fixed = load_captions(clean_out);
  std::size_t altered = 0;
  for (std::size_t i = 0; i < clean_fixed.size(); ++i) {
    altered += clean_fixed[i].tokens != files.clean_inputs[i];
  }
  const double exact_rate = static_cast<double>(exact) / static_cast<double>(fixed.size());
  const double altered_rate =
      static_cast<double>(altered) / static_cast<double>(clean_fixed.size());

  // Informational: the worked example from the error taxonomy.
  const Corrector corrector = Corrector::from_checkpoint(ckpt);
  const Tokens example = tokenize("a bird is singing and singing and chirping");
  std::string labels;
  for (auto l : corrector.predict(example)) labels += std::to_string(l);
  std::cout << "  example \"" << join_tokens(example) << "\" -> labels " << labels
            << " (expected 11110011)\n";

  return {exact_rate >= 0.99 && altered_rate <= 0.01,
          "corrupted test captions restored exactly " + fmt("%.2f", 100 * exact_rate) +
              "% (>= 99%) of " + std::to_string(fixed.size()) + "; clean captions altered " +
              fmt("%.2f", 100 * altered_rate) + "% (<= 1%) of " +
              std::to_string(clean_fixed.size())};
}

// 5. Fluency up, semantics flat.
Outcome fluency_semantics(Context& ctx) {
  const auto start = Clock::now();
  const TestFiles files = write_test_files(ctx);
  const auto fixed_path = ctx.work / "test_corrected.jsonl";
  if (!fs::exists(fixed_path)) {
    cmd_correct(ctx.trained_config->train.checkpoint, files.corrupted, fixed_path);
  }
  std::ostringstream table;
  const auto rows = nlohmann::json::parse(
      cmd_compare(files.corrupted, fixed_path, files.references, &table));
  std::cout << table.str();
  const double fb = rows["before"]["fluency_penalized_score"].get<double>();
  const double fa = rows["after"]["fluency_penalized_score"].get<double>();
  const double sb = rows["before"]["semantic_score"].get<double>();
  const double sa = rows["after"]["semantic_score"].get<double>();
  const double secs = seconds_since(start);

  // Ceiling: a corrector that restores every clean original exactly.
  std::vector<Tokens> before_tokens, gold_tokens;
  std::vector<References> refs;
  for (const auto& c : load_captions(files.corrupted)) before_tokens.push_back(c.tokens);
  for (const auto& t : files.corrupted_truth) {
    gold_tokens.push_back(t);
    refs.push_back({t});
  }
  const double gold_before = fluency_penalized_score(before_tokens, refs).unpenalized;
  const double gold_after = fluency_penalized_score(gold_tokens, refs).unpenalized;
  std::cout << "  exact-restoration ceiling: unpenalized " << fmt("%.2f", gold_before) << " -> "
            << fmt("%.2f", gold_after) << "\n";

  return {fa > fb && std::abs(sa - sb) <= 1.0 && secs <= 120,
          "penalized " + fmt("%.2f", fb) + " -> " + fmt("%.2f", fa) + " (must rise); unpenalized " +
              fmt("%.2f", sb) + " -> " + fmt("%.2f", sa) + " (|change| " +
              fmt("%.2f", std::abs(sa - sb)) + " <= 1.0); " + fmt("%.1f", secs) + " s (<= 120 s)"};
}

// 6. Metric oracles on micro-corpora.
Outcome metric_oracles(Context&) {
  using V = std::vector<Tokens>;
  using R = std::vector<References>;
  double worst = 0;
  int corpora = 0;
  auto compare = [&](double got, double want) { worst = std::max(worst, std::abs(got - want)); };

  // Hand-computed values.
  compare(bleu4(V{{"a", "a", "b"}}, R{{{"a", "b"}}}), std::pow(1.0 / 6.0, 0.25));
  compare(rouge_l(V{{"a", "c"}}, R{{{"a", "b", "c"}}}), 2.44 * (2.0 / 3.0) / (2.0 / 3.0 + 1.44));
  compare(cider_d(V{{"a", "b"}, {"c", "d"}}, R{{{"a", "b"}}, {{"c", "d"}}}), 5.0);
  const auto tm = token_metrics(std::vector<Labels>{{1, 0, 0, 0}}, std::vector<Labels>{{1, 1, 0, 0}});
  compare(tm.accuracy, 0.75);
  compare(tm.macro_f1, 11.0 / 15.0);
  corpora += 4;

  // Brute-force oracles on random micro-corpora.
  std::mt19937 gen(11);
  const std::vector<std::string> words = {"a", "b", "c", "d"};
  auto sentence = [&] {
    Tokens s(1 + gen() % 5);
    for (auto& w : s) w = words[gen() % words.size()];
    return s;
  };
  for (int k = 0; k < 30; ++k) {
    V cands;
    R refs;
    std::vector<Labels> pred, gold;
    for (std::size_t i = 0, n = 2 + gen() % 4; i < n; ++i) {
      cands.push_back(sentence());
      References r;
      for (std::size_t j = 0, m = 1 + gen() % 3; j < m; ++j) r.push_back(sentence());
      refs.push_back(r);
      Labels p(1 + gen() % 5), g(p.size());
      for (std::size_t t = 0; t < p.size(); ++t) {
        p[t] = gen() % 2;
        g[t] = gen() % 2;
      }
      pred.push_back(p);
      gold.push_back(g);
    }
    compare(bleu4(cands, refs), oracle::bleu4(cands, refs));
    compare(rouge_l(cands, refs), oracle::rouge_l(cands, refs));
    compare(cider_d(cands, refs), oracle::cider_d(cands, refs));
    const auto got = token_metrics(pred, gold);
    const auto want = oracle::token_scores(pred, gold);
    compare(got.accuracy, want.accuracy);
    compare(got.macro_f1, want.macro_f1);
    ++corpora;
  }
  return {worst <= 1e-6, std::to_string(corpora) + " micro-corpora, max |difference| " +
                             fmt("%.2e", worst) + " (<= 1e-6)"};
}

// 7. Byte-identical generate and single-threaded train.
Outcome determinism(Context& ctx) {
  const auto corpus = sample_corpus(ctx);
  std::vector<Caption> subset(corpus.begin(), corpus.begin() + 400);
  save_captions(ctx.work / "det_corpus.jsonl", subset);
  std::string text = "[generate]\ninput = det_corpus.jsonl\noutput_dir = OUT\nseed = 3\n"
                     "[train]\nepochs = 2\nhidden_dim = 16\nembed_dim = 16\nthreads = 1\n";
  auto run = [&](const std::string& name) {
    std::string t = text;
    t.replace(t.find("OUT"), 3, name);
    testing::write_text(ctx.work / (name + ".cfg"), t);
    const AppConfig cfg = load_config(ctx.work / (name + ".cfg"));
    cmd_generate(cfg);
    cmd_train(cfg);
    std::map<std::string, std::string> files;
    for (const char* f : {"train.jsonl", "validation.jsonl", "test.jsonl", "manifest.json",
                          "model.ckpt", "train_log.csv"}) {
      files[f] = testing::read_text(cfg.generate.output_dir / f);
    }
    return files;
  };
  const auto a = run("det_a");
  const auto b = run("det_b");
  std::size_t differing = 0, bytes = 0;
  for (const auto& [name, content] : a) {
    differing += b.at(name) != content;
    bytes += content.size();
  }
  return {differing == 0 && bytes > 0,
          std::to_string(a.size()) + " output files (" + std::to_string(bytes) + " bytes), " +
              std::to_string(differing) + " differ between runs"};
}

// 8. Detector flags every corruption and no clean input.
Outcome detector_closure(Context& ctx) {
  const auto corpus = sample_corpus(ctx);
  std::size_t corrupted = 0, missed = 0, clean_flagged = 0;
  for (const auto& c : corpus) clean_flagged += detect_repetition_error(c.tokens).has_value();
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto splits = generate_dataset(corpus, RuleConfig{}, {0.8, 0.1, 0.1}, seed);
    for (const auto* split : {&splits.train, &splits.validation, &splits.test}) {
      for (const auto& p : *split) {
        if (!p.rule) {
          clean_flagged += detect_repetition_error(p.tokens).has_value();
          continue;
        }
        ++corrupted;
        missed += !detect_repetition_error(p.tokens).has_value();
      }
    }
  }
  return {missed == 0 && clean_flagged == 0,
          std::to_string(corrupted - missed) + "/" + std::to_string(corrupted) +
              " corruptions flagged; " + std::to_string(clean_flagged) + " clean inputs flagged"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  Context ctx;
  std::string work;
  bool skip_full = false;
  std::string source = CAPFIX_SOURCE_DIR;
  app.add_option("--source-dir", source, "Repository root");
  std::string config;
  app.add_option("--config", config, "Training config for the full run (default configs/desk.cfg)");
  app.add_option("--workdir", work, "Scratch directory (default: a fresh temp dir)");
  app.add_flag("--skip-full", skip_full, "Skip the desk-scale training run and its dependents");
  CLI11_PARSE(app, argc, argv);
  ctx.source_dir = source;
  ctx.full = !skip_full;
  ctx.config = config.empty() ? ctx.source_dir / "configs/desk.cfg" : fs::path(config);
  std::optional<testing::TempDir> temp;
  if (work.empty()) {
    temp.emplace();
    ctx.work = temp->path();
  } else {
    ctx.work = work;
    fs::create_directories(ctx.work);
  }

  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome(Context&)> run;
    bool needs_model;
  };
  const std::vector<Criterion> criteria = {
      {1, "classifier quality", classifier_quality, true},
      {2, "mask recovery", mask_recovery, false},
      {3, "gradient correctness", gradient_check, false},
      {4, "correction fidelity", correction_fidelity, true},
      {5, "fluency up, semantics flat", fluency_semantics, true},
      {6, "metric oracles", metric_oracles, false},
      {7, "determinism", determinism, false},
      {8, "detector/generator closure", detector_closure, false},
  };

  std::vector<std::string> summary;
  int failed = 0;
  for (const auto& c : criteria) {
    std::string line;
    if (c.needs_model && (!ctx.full || (c.id != 1 && !ctx.trained_config))) {
      line = "SKIP criterion " + std::to_string(c.id) + " (" + c.name + "): " +
             (ctx.full ? "needs the trained model from criterion 1" : "full run disabled");
    } else {
      std::cout << "criterion " << c.id << " (" << c.name << ")\n" << std::flush;
      Outcome o;
      try {
        o = c.run(ctx);
      } catch (const std::exception& e) {
        o = {false, std::string("error: ") + e.what()};
      }
      failed += !o.pass;
      line = std::string(o.pass ? "PASS" : "FAIL") + " criterion " + std::to_string(c.id) +
             " (" + c.name + "): " + o.detail;
    }
    std::cout << line << "\n" << std::flush;
    summary.push_back(line);
  }
  std::cout << "\nsummary\n";
  for (const auto& line : summary) std::cout << line << "\n";
  return failed == 0 ? 0 : 1;
}
