#ifndef CAPFIX_CORRECTOR_H_
#define CAPFIX_CORRECTOR_H_

#include <filesystem>
#include <optional>
#include <span>

#include "capfix/corpus.h"
#include "capfix/neural/model.h"

namespace capfix {

// argmax per position, keeping on an exact tie. Throws on empty input.
Labels predict_labels(const neural::ModelParameters& params, const Vocabulary& vocab,
                      std::span<const std::string> tokens);

// Tokens whose label is 1. All-zero labels return the input unchanged.
Tokens apply_mask(std::span<const std::string> tokens, std::span<const std::uint8_t> labels);

struct Correction {
  Tokens tokens;
  // Over the input tokens; composed across passes when iterating.
  Labels mask;
  int passes = 0;
};

class Corrector {
 public:
  static constexpr int kMaxPasses = 3;

  Corrector(neural::ModelParameters params, Vocabulary vocab);
  static Corrector from_checkpoint(const std::filesystem::path& path);

  Labels predict(std::span<const std::string> tokens) const;
  // One pass, or up to kMaxPasses until nothing changes when `iterate` is set.
  Correction correct(std::span<const std::string> tokens, bool iterate = false) const;

  const Vocabulary& vocab() const { return vocab_; }

 private:
  neural::ModelParameters params_;
  Vocabulary vocab_;
};

struct CorrectOptions {
  bool iterate = false;
  int threads = 1;
  // Also write the composed masks as labeled JSONL.
  std::optional<std::filesystem::path> labels_out;
};

struct CorrectionSummary {
  std::size_t count = 0;
  std::size_t count_changed = 0;
  std::size_t tokens_deleted = 0;
};

// Captions JSONL in, captions JSONL out with the same ids and order.
CorrectionSummary correct_file(const Corrector& corrector,
                               const std::filesystem::path& in_path,
                               const std::filesystem::path& out_path,
                               const CorrectOptions& options = {});

}  // namespace capfix

#endif  // CAPFIX_CORRECTOR_H_
