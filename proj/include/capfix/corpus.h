#ifndef CAPFIX_CORPUS_H_
#define CAPFIX_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "capfix/rule_kind.h"

namespace capfix {

using Tokens = std::vector<std::string>;
// 1 = keep, 0 = delete.
using Labels = std::vector<std::uint8_t>;

struct Caption {
  std::string id;
  Tokens tokens;

  bool operator==(const Caption&) const = default;
};

// A token sequence with its keep/delete labels. Corrupted pairs carry the
// rule that produced them; clean-clean pairs have no rule and all-ones labels.
struct LabeledCaption {
  Tokens tokens;
  Labels labels;
  std::string source_id;
  std::optional<RuleKind> rule;

  bool operator==(const LabeledCaption&) const = default;
};

// Reference set for one candidate caption.
struct ReferenceSet {
  std::string id;
  std::vector<Tokens> captions;

  bool operator==(const ReferenceSet&) const = default;
};

// Lowercases ASCII, strips ASCII punctuation and splits on whitespace runs.
Tokens tokenize(std::string_view raw);

std::string join_tokens(std::span<const std::string> tokens);

// Tokens where label == 1, in order.
Tokens kept_tokens(const LabeledCaption& pair);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::string_view kUnkToken = "<unk>";

  // Specials only.
  Vocabulary();
  // `index_to_token` must start with the two specials and hold no duplicates.
  explicit Vocabulary(std::vector<std::string> index_to_token);

  std::size_t size() const { return index_to_token_.size(); }
  bool contains(std::string_view token) const;
  // Unknown tokens map to kUnk.
  int index_of(std::string_view token) const;
  // Throws on an out-of-range index.
  const std::string& token_at(int index) const;
  const std::vector<std::string>& tokens() const { return index_to_token_; }

  std::vector<int> encode(std::span<const std::string> tokens) const;
  Tokens decode(std::span<const int> indices) const;

  bool operator==(const Vocabulary& other) const {
    return index_to_token_ == other.index_to_token_;
  }

 private:
  std::vector<std::string> index_to_token_;
  std::unordered_map<std::string, int> token_to_index_;
};

// Specials first, then tokens with frequency >= min_count ordered by
// descending frequency, ties broken lexicographically.
Vocabulary build_vocab(std::span<const Caption> corpus, int min_count = 1);
Vocabulary build_vocab(std::span<const LabeledCaption> corpus,
                       int min_count = 1);

// {"id": string, "caption": string} per line.
std::vector<Caption> load_captions(const std::filesystem::path& path);
void save_captions(const std::filesystem::path& path,
                   std::span<const Caption> captions);

// {"source_id": string, "tokens": [string], "labels": [0|1],
//  "rule": string|null} per line.
std::vector<LabeledCaption> load_labeled(const std::filesystem::path& path);
void save_labeled(const std::filesystem::path& path,
                  std::span<const LabeledCaption> pairs);

// {"id": string, "captions": [string]} per line.
std::vector<ReferenceSet> load_references(const std::filesystem::path& path);
void save_references(const std::filesystem::path& path,
                     std::span<const ReferenceSet> references);

// Writes `contents` to a sibling temporary file and renames it over `path`,
// so readers never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view contents);

}  // namespace capfix

#endif  // CAPFIX_CORPUS_H_
