#ifndef CAPFIX_COMMANDS_H_
#define CAPFIX_COMMANDS_H_

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "capfix/config.h"
#include "capfix/corrector.h"

namespace capfix {

inline constexpr std::string_view kTrainFile = "train.jsonl";
inline constexpr std::string_view kValidationFile = "validation.jsonl";
inline constexpr std::string_view kTestFile = "test.jsonl";
inline constexpr std::string_view kManifestFile = "manifest.json";

// Writes the three splits and manifest.json into generate.output_dir. Either
// every file is written or none is. Returns the manifest text.
std::string cmd_generate(const AppConfig& cfg);

// Trains on the generated splits, writes the best checkpoint and the CSV
// epoch log. Progress lines go to `progress` when given.
neural::TrainResult cmd_train(const AppConfig& cfg, std::ostream* progress = nullptr);

// Returns the summary JSON.
std::string cmd_correct(const std::filesystem::path& checkpoint,
                        const std::filesystem::path& in_path,
                        const std::filesystem::path& out_path,
                        const CorrectOptions& options = {});

struct EvaluateOptions {
  std::filesystem::path candidates;
  std::filesystem::path references;
  // Gold and predicted labeled JSONL, aligned line by line.
  std::optional<std::filesystem::path> gold_labels;
  std::optional<std::filesystem::path> predicted_labels;
  // Per-sentence CSV: id, flagged error kind, similarity, candidate.
  std::optional<std::filesystem::path> diagnostics;
  double penalty = 0.9;
};

// Candidates and references must carry the same id set; candidates order
// wins. Returns the report JSON.
std::string cmd_evaluate(const EvaluateOptions& options);

// Two reports over the same references. Returns JSON; writes a text table to
// `table` when given.
std::string cmd_compare(const std::filesystem::path& before,
                        const std::filesystem::path& after,
                        const std::filesystem::path& references,
                        std::ostream* table = nullptr, double penalty = 0.9);

// Report computation shared by the commands; throws on id mismatch.
EvaluationReport evaluate_files(const std::filesystem::path& candidates,
                                const std::filesystem::path& references,
                                double penalty = 0.9);

std::string report_json(const EvaluationReport& report);

}  // namespace capfix

#endif  // CAPFIX_COMMANDS_H_
