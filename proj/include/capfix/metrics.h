#ifndef CAPFIX_METRICS_H_
#define CAPFIX_METRICS_H_

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "capfix/corpus.h"

namespace capfix {

// Reference captions for one candidate.
using References = std::vector<Tokens>;

// Corpus BLEU-4, in [0, 1]. Uniform weights over n = 1..4, clipped counts,
// brevity penalty against the closest reference length (ties -> shorter).
// A zero precision for n >= 2 is replaced by (matches + 1) / (total + 1).
double bleu4(std::span<const Tokens> candidates,
             std::span<const References> references);

// Mean over candidates of the best LCS F-measure against any reference, in
// [0, 1].
double rouge_l(std::span<const Tokens> candidates,
               std::span<const References> references, double beta = 1.2);

// CIDEr-D with document frequencies from the evaluation references, the
// 10x factor of the published metric included (so typical values are in
// [0, 10]). Requires at least two items.
double cider_d(std::span<const Tokens> candidates,
               std::span<const References> references, double sigma = 6.0);

enum class ErrorKind {
  kAdverbRepetition,    // adjacent duplicate word
  kVerbRepetition,      // w CONJ w
  kPartialRepetition,   // a repeated span
  kSentenceRepetition,  // the whole preceding sentence repeated after CONJ
  kExtraTail,           // dangling function word at the end
};

std::string_view error_kind_name(ErrorKind kind);

struct DetectorConfig {
  std::vector<Tokens> conjunctions = {{"and"},  {"while"}, {"as"},
                                      {"and", "then"}, {"then"}, {"or"},
                                      {"but"}, {"followed", "by"}};
  std::vector<std::string> tail_words = {"and",  "a",  "the", "with", "in",
                                         "then", "as", "while", "to", "of"};
  // Any span this long repeated later in the sentence is an error.
  std::size_t min_repeated_span = 3;
};

// Rule-based repetition detector. Returns the first matching error kind, or
// nullopt for a clean sentence. Checks in order: adjacent duplicate,
// w CONJ w, repeated span (length >= min_repeated_span anywhere later, or
// length >= 2 directly after a conjunction), dangling tail word.
std::optional<ErrorKind> detect_repetition_error(
    std::span<const std::string> tokens, const DetectorConfig& cfg = {});

struct FluencyScore {
  double penalized = 0;    // x100
  double unpenalized = 0;  // x100
  double error_rate = 0;   // fraction of candidates flagged
};

// Per candidate: best cosine over references of binary-TF x IDF unigram
// vectors, IDF smoothed over the reference sentences. Flagged candidates
// have their similarity multiplied by (1 - penalty).
FluencyScore fluency_penalized_score(std::span<const Tokens> candidates,
                                     std::span<const References> references,
                                     double penalty = 0.9,
                                     const DetectorConfig& detector = {});

// Per-candidate unpenalized similarity in [0, 1], in input order.
std::vector<double> semantic_similarities(
    std::span<const Tokens> candidates, std::span<const References> references);

struct TokenMetrics {
  double accuracy = 0;
  double macro_f1 = 0;
  double f1_delete = 0;  // class 0
  double f1_keep = 0;    // class 1
};

// Token accuracy and macro-F1 over classes {0, 1}. A class absent from both
// gold and prediction scores F1 = 1.
TokenMetrics token_metrics(std::span<const Labels> predicted,
                           std::span<const Labels> gold);

// Everything reported for one candidate file. Scores are x100.
struct EvaluationReport {
  std::size_t count = 0;
  double bleu4 = 0;
  double rouge_l = 0;
  // Absent for single-item corpora.
  std::optional<double> cider_d;
  double semantic_score = 0;
  double fluency_penalized_score = 0;
  double error_rate = 0;
  std::optional<TokenMetrics> tokens;
};

EvaluationReport evaluate(std::span<const Tokens> candidates,
                          std::span<const References> references,
                          double penalty = 0.9);

}  // namespace capfix

#endif  // CAPFIX_METRICS_H_
