#ifndef CAPFIX_CORRUPTOR_H_
#define CAPFIX_CORRUPTOR_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "capfix/corpus.h"
#include "capfix/random.h"
#include "capfix/rule_kind.h"

namespace capfix {

// Parameterisation of the corruption rules.
struct RuleConfig {
  std::vector<Tokens> conjunctions = {{"and"}, {"while"}, {"as"}, {"and", "then"}};
  std::vector<Tokens> tails = {
      {"and"}, {"and", "a"}, {"and", "then"}, {"with", "a"}, {"in", "the"}};
  std::vector<std::string> verb_suffixes = {"ing", "s", "es", "ed"};
  std::set<std::string> verb_stoplist = default_verb_stoplist();
  std::string adverb_suffix = "ly";
  std::size_t partial_min_len = 3;
  std::size_t partial_max_len = 7;
  // Clean-clean pairs emitted per clean sentence.
  std::size_t clean_pairs_per_sentence = 1;

  // Throws capfix::Error describing every violated constraint.
  void validate() const;
  // Canonical text form; stable across runs, used for the manifest hash.
  std::string canonical() const;

  // Contents of data/verb_stoplist.txt, compiled in.
  static std::set<std::string> default_verb_stoplist();
};

std::set<std::string> read_stoplist(const std::filesystem::path& path);

// Indices of tokens that end in a verb suffix (and are longer than it) and
// are not on the stoplist.
std::vector<std::size_t> find_verbs(std::span<const std::string> tokens,
                                    const RuleConfig& cfg = {});
// Indices of tokens that end in the adverb suffix (and are longer than it).
std::vector<std::size_t> find_adverbs(std::span<const std::string> tokens,
                                      const RuleConfig& cfg = {});

// Applies one rule. Returns nullopt when the rule is inapplicable: no verb or
// adverb to repeat, or a sentence too short for a partial repetition.
std::optional<LabeledCaption> corrupt(const Caption& clean, RuleKind rule,
                                      const RuleConfig& cfg, Rng& rng);

// The pairs derived from one clean sentence: one corruption per rule (an
// inapplicable rule falls back to sentence repetition), then the clean-clean
// pairs. The rng stream is derived from (seed, id).
std::vector<LabeledCaption> corrupt_sentence(const Caption& clean,
                                             const RuleConfig& cfg,
                                             std::uint64_t seed);

struct SplitRatios {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
};

struct DatasetSplits {
  std::vector<LabeledCaption> train;
  std::vector<LabeledCaption> validation;
  std::vector<LabeledCaption> test;
  std::uint64_t split_seed = 0;
};

// Sentences are ordered by stable_hash(id, seed) and cut at the configured
// fractions, so every pair of one sentence lands in one split. The output is
// a pure function of the arguments; `threads` only affects speed.
DatasetSplits generate_dataset(std::span<const Caption> corpus,
                               const RuleConfig& cfg, SplitRatios ratios,
                               std::uint64_t seed, int threads = 1);

}  // namespace capfix

#endif  // CAPFIX_CORRUPTOR_H_
