#include "capfix/commands.h"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "capfix/error.h"
#include "capfix/neural/checkpoint.h"
#include "json.hpp"

namespace capfix {
namespace {

using Json = nlohmann::ordered_json;

std::string hex64(std::uint64_t v) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << v;
  return out.str();
}

std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Json split_counts(const std::vector<LabeledCaption>& pairs) {
  std::set<std::string> sources;
  for (const auto& p : pairs) sources.insert(p.source_id);
  return Json{{"sentences", sources.size()}, {"pairs", pairs.size()}};
}

struct Aligned {
  std::vector<std::string> ids;
  std::vector<Tokens> candidates;
  std::vector<References> references;
};

std::string list_ids(const std::vector<std::string>& ids) {
  std::string out;
  const std::size_t shown = std::min<std::size_t>(ids.size(), 20);
  for (std::size_t i = 0; i < shown; ++i) out += (i ? ", " : "") + ids[i];
  if (ids.size() > shown) out += ", ... (" + std::to_string(ids.size()) + " total)";
  return out;
}

Aligned align(const std::filesystem::path& cand_path, const std::filesystem::path& ref_path) {
  const auto candidates = load_captions(cand_path);
  const auto references = load_references(ref_path);
  std::unordered_map<std::string, const ReferenceSet*> by_id;
  for (const auto& r : references) by_id[r.id] = &r;

  Aligned out;
  std::vector<std::string> missing_refs;
  std::set<std::string> seen;
  for (const auto& c : candidates) {
    auto it = by_id.find(c.id);
    if (it == by_id.end()) {
      missing_refs.push_back(c.id);
      continue;
    }
    seen.insert(c.id);
    out.ids.push_back(c.id);
    out.candidates.push_back(c.tokens);
    out.references.push_back(it->second->captions);
  }
  std::vector<std::string> missing_cands;
  for (const auto& r : references) {
    if (!seen.count(r.id)) missing_cands.push_back(r.id);
  }
  if (!missing_refs.empty() || !missing_cands.empty()) {
    std::string what = "candidate and reference ids do not align";
    if (!missing_refs.empty()) what += "\n  missing from references: " + list_ids(missing_refs);
    if (!missing_cands.empty()) what += "\n  missing from candidates: " + list_ids(missing_cands);
    throw Error(what);
  }
  return out;
}

Json report_to_json(const EvaluationReport& r) {
  Json j{{"count", r.count},
         {"bleu4", r.bleu4},
         {"rouge_l", r.rouge_l},
         {"cider_d", r.cider_d ? Json(*r.cider_d) : Json(nullptr)},
         {"semantic_score", r.semantic_score},
         {"fluency_penalized_score", r.fluency_penalized_score},
         {"error_rate", r.error_rate}};
  if (r.tokens) {
    j["token_metrics"] = Json{{"accuracy", r.tokens->accuracy},
                              {"macro_f1", r.tokens->macro_f1},
                              {"f1_delete", r.tokens->f1_delete},
                              {"f1_keep", r.tokens->f1_keep}};
  }
  return j;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string cmd_generate(const AppConfig& cfg) {
  const auto& g = cfg.generate;
  const std::string input_bytes = read_bytes(g.input);
  const auto corpus = load_captions(g.input);
  const auto splits = generate_dataset(corpus, cfg.rules, g.ratios, g.seed, g.threads);

  Json manifest{
      {"seed", g.seed},
      {"split_seed", splits.split_seed},
      {"rule_config_hash", hex64(stable_hash(cfg.rules.canonical()))},
      {"input_hash", hex64(stable_hash(input_bytes))},
      {"ratios", {{"train", g.ratios.train}, {"validation", g.ratios.validation},
                  {"test", g.ratios.test}}},
      {"counts",
       {{"train", split_counts(splits.train)},
        {"validation", split_counts(splits.validation)},
        {"test", split_counts(splits.test)},
        {"total", {{"sentences", corpus.size()},
                   {"pairs", splits.train.size() + splits.validation.size() +
                                 splits.test.size()}}}}},
      {"files", {{"train", kTrainFile}, {"validation", kValidationFile},
                 {"test", kTestFile}}}};
  const std::string manifest_text = manifest.dump(2) + "\n";

  // Stage every file, then rename them into place.
  std::filesystem::create_directories(g.output_dir);
  const std::vector<std::pair<std::string_view, const std::vector<LabeledCaption>*>> files = {
      {kTrainFile, &splits.train}, {kValidationFile, &splits.validation}, {kTestFile, &splits.test}};
  std::vector<std::filesystem::path> staged;
  auto staging = [&](std::string_view name) {
    return g.output_dir / (std::string(name) + ".staged");
  };
  try {
    for (const auto& [name, pairs] : files) {
      staged.push_back(staging(name));
      save_labeled(staged.back(), *pairs);
    }
    staged.push_back(staging(kManifestFile));
    write_file_atomic(staged.back(), manifest_text);
  } catch (...) {
    for (const auto& p : staged) std::filesystem::remove(p);
    throw;
  }
  for (const auto& [name, pairs] : files) {
    std::filesystem::rename(staging(name), g.output_dir / name);
  }
  std::filesystem::rename(staging(kManifestFile), g.output_dir / kManifestFile);
  return manifest_text;
}

neural::TrainResult cmd_train(const AppConfig& cfg, std::ostream* progress) {
  const auto& t = cfg.train;
  const auto train_split = load_labeled(t.data_dir / kTrainFile);
  const auto validation_split = load_labeled(t.data_dir / kValidationFile);
  if (progress) {
    *progress << "training on " << train_split.size() << " pairs, validating on "
              << validation_split.size() << "\n";
  }
  auto on_epoch = [&](const neural::EpochLog& e) {
    if (!progress) return;
    *progress << "epoch " << e.epoch << " lr " << e.lr << " loss " << e.train_loss
              << " val_acc " << e.val_accuracy << " val_f1 " << e.val_macro_f1
              << std::endl;
  };
  auto result = neural::train(train_split, validation_split, t.training, on_epoch);

  std::string csv = "epoch,lr,train_loss,val_accuracy,val_macro_f1\n";
  for (const auto& e : result.log) {
    csv += std::to_string(e.epoch) + "," + shortest(e.lr) + "," + shortest(e.train_loss) +
           "," + shortest(e.val_accuracy) + "," + shortest(e.val_macro_f1) + "\n";
  }
  if (!t.checkpoint.parent_path().empty()) {
    std::filesystem::create_directories(t.checkpoint.parent_path());
  }
  if (!t.log.parent_path().empty()) std::filesystem::create_directories(t.log.parent_path());
  neural::save_checkpoint(t.checkpoint, {result.params, result.vocab, t.training});
  write_file_atomic(t.log, csv);
  return result;
}

std::string cmd_correct(const std::filesystem::path& checkpoint,
                        const std::filesystem::path& in_path,
                        const std::filesystem::path& out_path,
                        const CorrectOptions& options) {
  const Corrector corrector = Corrector::from_checkpoint(checkpoint);
  const auto summary = correct_file(corrector, in_path, out_path, options);
  Json j{{"count", summary.count},
         {"count_changed", summary.count_changed},
         {"tokens_deleted", summary.tokens_deleted}};
  return j.dump(2);
}

EvaluationReport evaluate_files(const std::filesystem::path& candidates,
                                const std::filesystem::path& references,
                                double penalty) {
  const Aligned data = align(candidates, references);
  return evaluate(data.candidates, data.references, penalty);
}

std::string report_json(const EvaluationReport& report) {
  return report_to_json(report).dump(2);
}

std::string cmd_evaluate(const EvaluateOptions& options) {
  if (options.gold_labels.has_value() != options.predicted_labels.has_value()) {
    throw Error("--labels and --predicted-labels must be given together");
  }
  const Aligned data = align(options.candidates, options.references);
  EvaluationReport report = evaluate(data.candidates, data.references, options.penalty);

  if (options.gold_labels) {
    const auto gold = load_labeled(*options.gold_labels);
    const auto predicted = load_labeled(*options.predicted_labels);
    if (gold.size() != predicted.size()) {
      throw Error("label files hold " + std::to_string(gold.size()) + " and " +
                  std::to_string(predicted.size()) + " sentences");
    }
    std::vector<Labels> g, p;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      if (gold[i].tokens != predicted[i].tokens) {
        throw Error("label files disagree on the tokens of line " + std::to_string(i + 1));
      }
      g.push_back(gold[i].labels);
      p.push_back(predicted[i].labels);
    }
    report.tokens = token_metrics(p, g);
  }

  if (options.diagnostics) {
    const auto sims = semantic_similarities(data.candidates, data.references);
    std::string csv = "id,error,similarity,candidate\n";
    for (std::size_t i = 0; i < data.ids.size(); ++i) {
      const auto kind = detect_repetition_error(data.candidates[i]);
      csv += csv_field(data.ids[i]) + "," +
             (kind ? std::string(error_kind_name(*kind)) : std::string()) + "," +
             shortest(sims[i]) + "," + csv_field(join_tokens(data.candidates[i])) + "\n";
    }
    write_file_atomic(*options.diagnostics, csv);
  }
  return report_json(report);
}

std::string cmd_compare(const std::filesystem::path& before,
                        const std::filesystem::path& after,
                        const std::filesystem::path& references,
                        std::ostream* table, double penalty) {
  const auto b = evaluate_files(before, references, penalty);
  const auto a = evaluate_files(after, references, penalty);
  if (table) {
    auto row = [&](const char* name, const EvaluationReport& r) {
      *table << std::left << std::setw(8) << name << std::right << std::fixed
             << std::setprecision(1) << std::setw(8) << r.bleu4 << std::setw(9)
             << r.rouge_l << std::setw(9);
      if (r.cider_d) {
        *table << *r.cider_d;
      } else {
        *table << "-";
      }
      *table << std::setw(10) << r.fluency_penalized_score << std::setw(12)
             << r.semantic_score << std::setw(11) << 100.0 * r.error_rate << "\n";
    };
    *table << std::left << std::setw(8) << "run" << std::right << std::setw(8) << "BLEU4"
           << std::setw(9) << "ROUGE-L" << std::setw(9) << "CIDEr-D" << std::setw(10)
           << "fluency" << std::setw(12) << "no-penalty" << std::setw(11) << "err%" << "\n";
    row("before", b);
    row("after", a);
    table->unsetf(std::ios::floatfield);
  }
  Json j{{"before", report_to_json(b)}, {"after", report_to_json(a)}};
  return j.dump(2);
}

}  // namespace capfix
