#include "capfix/metrics.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include "capfix/error.h"

namespace capfix {
namespace {

constexpr int kMaxOrder = 4;

using NgramCounts = std::unordered_map<std::string, int>;

// n-grams of one order, keyed by the space-joined words.
NgramCounts ngrams(std::span<const std::string> tokens, int order) {
  NgramCounts counts;
  const auto n = static_cast<std::size_t>(order);
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[join_tokens(tokens.subspan(i, n))];
  }
  return counts;
}

void check_aligned(std::span<const Tokens> candidates,
                   std::span<const References> references) {
  if (candidates.empty()) throw Error("empty candidate set");
  if (candidates.size() != references.size()) {
    throw Error("candidates and references differ in count");
  }
  for (const auto& refs : references) {
    if (refs.empty()) throw Error("candidate without references");
  }
}

std::size_t lcs_length(std::span<const std::string> a,
                       std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1
                                    : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

bool matches_at(std::span<const std::string> tokens, std::size_t at,
                const Tokens& phrase) {
  if (at + phrase.size() > tokens.size()) return false;
  return std::equal(phrase.begin(), phrase.end(), tokens.begin() + at);
}

bool same_span(std::span<const std::string> tokens, std::size_t a,
               std::size_t b, std::size_t length) {
  return std::equal(tokens.begin() + a, tokens.begin() + a + length,
                    tokens.begin() + b);
}

// Document frequency per n-gram over reference sets, as in CIDEr.
struct CiderVector {
  std::array<std::unordered_map<std::string, double>, kMaxOrder> weights;
  std::array<double, kMaxOrder> norms{};
  std::size_t length = 0;
};

CiderVector cider_vector(std::span<const std::string> tokens,
                         const std::unordered_map<std::string, int>& df,
                         double log_docs) {
  CiderVector vec;
  vec.length = tokens.size();
  for (int n = 1; n <= kMaxOrder; ++n) {
    for (const auto& [gram, tf] : ngrams(tokens, n)) {
      auto it = df.find(gram);
      double doc_freq = it == df.end() ? 0.0 : it->second;
      double w = tf * (log_docs - std::log(std::max(1.0, doc_freq)));
      vec.weights[n - 1][gram] = w;
      vec.norms[n - 1] += w * w;
    }
    vec.norms[n - 1] = std::sqrt(vec.norms[n - 1]);
  }
  return vec;
}

double cider_similarity(const CiderVector& hyp, const CiderVector& ref,
                        double sigma) {
  const double delta =
      static_cast<double>(hyp.length) - static_cast<double>(ref.length);
  const double penalty = std::exp(-(delta * delta) / (2 * sigma * sigma));
  double total = 0;
  for (int n = 0; n < kMaxOrder; ++n) {
    double val = 0;
    for (const auto& [gram, w_hyp] : hyp.weights[n]) {
      auto it = ref.weights[n].find(gram);
      if (it == ref.weights[n].end()) continue;
      val += std::min(w_hyp, it->second) * it->second;
    }
    if (hyp.norms[n] != 0 && ref.norms[n] != 0) {
      val /= hyp.norms[n] * ref.norms[n];
    }
    total += val * penalty;
  }
  return total / kMaxOrder;
}

struct IdfTable {
  std::unordered_map<std::string, int> df;
  double docs = 0;

  double idf(const std::string& word) const {
    auto it = df.find(word);
    double d = it == df.end() ? 0.0 : it->second;
    return std::log((1 + docs) / (1 + d)) + 1;
  }
};

double binary_cosine(const std::unordered_set<std::string>& a,
                     const std::unordered_set<std::string>& b,
                     const IdfTable& table) {
  double dot = 0, na = 0, nb = 0;
  for (const auto& w : a) {
    double x = table.idf(w);
    na += x * x;
    if (b.count(w)) dot += x * x;
  }
  for (const auto& w : b) {
    double x = table.idf(w);
    nb += x * x;
  }
  if (na == 0 || nb == 0) return 0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

void f1_for_class(std::size_t tp, std::size_t fp, std::size_t fn, double& f1) {
  const std::size_t denom = 2 * tp + fp + fn;
  f1 = denom == 0 ? 1.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

}  // namespace

double bleu4(std::span<const Tokens> candidates,
             std::span<const References> references) {
  check_aligned(candidates, references);
  std::array<double, kMaxOrder> matches{}, totals{};
  double cand_len = 0, ref_len = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Tokens& cand = candidates[i];
    cand_len += static_cast<double>(cand.size());
    std::size_t best = references[i].front().size();
    for (const auto& ref : references[i]) {
      auto diff = [&](std::size_t len) {
        return len > cand.size() ? len - cand.size() : cand.size() - len;
      };
      if (diff(ref.size()) < diff(best) ||
          (diff(ref.size()) == diff(best) && ref.size() < best)) {
        best = ref.size();
      }
    }
    ref_len += static_cast<double>(best);
    for (int n = 1; n <= kMaxOrder; ++n) {
      NgramCounts max_ref;
      for (const auto& ref : references[i]) {
        for (const auto& [gram, count] : ngrams(ref, n)) {
          int& slot = max_ref[gram];
          slot = std::max(slot, count);
        }
      }
      for (const auto& [gram, count] : ngrams(cand, n)) {
        auto it = max_ref.find(gram);
        if (it != max_ref.end()) matches[n - 1] += std::min(count, it->second);
        totals[n - 1] += count;
      }
    }
  }
  if (matches[0] == 0) return 0.0;
  double log_sum = 0;
  for (int n = 0; n < kMaxOrder; ++n) {
    double p = matches[n] / totals[n];
    if (n > 0 && matches[n] == 0) p = (matches[n] + 1) / (totals[n] + 1);
    log_sum += std::log(p);
  }
  const double bp = cand_len > ref_len ? 1.0 : std::exp(1.0 - ref_len / cand_len);
  return bp * std::exp(log_sum / kMaxOrder);
}

double rouge_l(std::span<const Tokens> candidates,
               std::span<const References> references, double beta) {
  check_aligned(candidates, references);
  const double b2 = beta * beta;
  double total = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    double best = 0;
    for (const auto& ref : references[i]) {
      const auto lcs = static_cast<double>(lcs_length(candidates[i], ref));
      if (lcs == 0 || candidates[i].empty()) continue;
      const double precision = lcs / static_cast<double>(candidates[i].size());
      const double recall = lcs / static_cast<double>(ref.size());
      best = std::max(best, (1 + b2) * precision * recall / (recall + b2 * precision));
    }
    total += best;
  }
  return total / static_cast<double>(candidates.size());
}

double cider_d(std::span<const Tokens> candidates,
               std::span<const References> references, double sigma) {
  check_aligned(candidates, references);
  if (candidates.size() < 2) {
    throw Error("CIDEr-D needs at least 2 items to estimate document "
                "frequencies; evaluate a larger corpus");
  }
  std::unordered_map<std::string, int> df;
  for (const auto& refs : references) {
    std::unordered_set<std::string> seen;
    for (const auto& ref : refs) {
      for (int n = 1; n <= kMaxOrder; ++n) {
        for (const auto& [gram, count] : ngrams(ref, n)) seen.insert(gram);
      }
    }
    for (const auto& gram : seen) ++df[gram];
  }
  const double log_docs = std::log(static_cast<double>(references.size()));
  double total = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const CiderVector hyp = cider_vector(candidates[i], df, log_docs);
    double item = 0;
    for (const auto& ref : references[i]) {
      item += cider_similarity(hyp, cider_vector(ref, df, log_docs), sigma);
    }
    total += 10.0 * item / static_cast<double>(references[i].size());
  }
  return total / static_cast<double>(candidates.size());
}

std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kAdverbRepetition:
      return "adverb_repetition";
    case ErrorKind::kVerbRepetition:
      return "verb_repetition";
    case ErrorKind::kPartialRepetition:
      return "partial_repetition";
    case ErrorKind::kSentenceRepetition:
      return "sentence_repetition";
    case ErrorKind::kExtraTail:
      return "extra_tail";
  }
  return "unknown";
}

std::optional<ErrorKind> detect_repetition_error(
    std::span<const std::string> tokens, const DetectorConfig& cfg) {
  const std::size_t n = tokens.size();
  if (n == 0) return std::nullopt;

  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (tokens[i] == tokens[i + 1]) return ErrorKind::kAdverbRepetition;
  }

  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& conj : cfg.conjunctions) {
      const std::size_t j = i + 1 + conj.size();
      if (j < n && matches_at(tokens, i + 1, conj) && tokens[j] == tokens[i]) {
        return ErrorKind::kVerbRepetition;
      }
    }
  }

  // S CONJ S covering the whole sentence.
  for (const auto& conj : cfg.conjunctions) {
    if (n <= conj.size() || (n - conj.size()) % 2 != 0) continue;
    const std::size_t k = (n - conj.size()) / 2;
    if (k >= 2 && matches_at(tokens, k, conj) &&
        same_span(tokens, 0, k + conj.size(), k)) {
      return ErrorKind::kSentenceRepetition;
    }
  }

  for (std::size_t k = 2; 2 * k <= n; ++k) {
    for (std::size_t i = 0; i + 2 * k <= n; ++i) {
      for (std::size_t j = i + k; j + k <= n; ++j) {
        if (!same_span(tokens, i, j, k)) continue;
        if (k >= cfg.min_repeated_span) return ErrorKind::kPartialRepetition;
        for (const auto& conj : cfg.conjunctions) {
          if (i + k + conj.size() == j && matches_at(tokens, i + k, conj)) {
            return ErrorKind::kPartialRepetition;
          }
        }
      }
    }
  }

  if (std::find(cfg.tail_words.begin(), cfg.tail_words.end(), tokens.back()) !=
      cfg.tail_words.end()) {
    return ErrorKind::kExtraTail;
  }
  return std::nullopt;
}

std::vector<double> semantic_similarities(
    std::span<const Tokens> candidates, std::span<const References> references) {
  check_aligned(candidates, references);
  IdfTable table;
  std::vector<std::vector<std::unordered_set<std::string>>> ref_sets;
  ref_sets.reserve(references.size());
  for (const auto& refs : references) {
    auto& sets = ref_sets.emplace_back();
    for (const auto& ref : refs) {
      sets.emplace_back(ref.begin(), ref.end());
      for (const auto& w : sets.back()) ++table.df[w];
      table.docs += 1;
    }
  }
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    std::unordered_set<std::string> cand(candidates[i].begin(),
                                         candidates[i].end());
    double best = 0;
    for (const auto& ref : ref_sets[i]) {
      best = std::max(best, binary_cosine(cand, ref, table));
    }
    scores.push_back(best);
  }
  return scores;
}

FluencyScore fluency_penalized_score(std::span<const Tokens> candidates,
                                     std::span<const References> references,
                                     double penalty,
                                     const DetectorConfig& detector) {
  if (penalty < 0 || penalty > 1) throw Error("penalty must lie in [0, 1]");
  const auto similarities = semantic_similarities(candidates, references);
  FluencyScore score;
  std::size_t flagged = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double s = 100.0 * similarities[i];
    score.unpenalized += s;
    if (detect_repetition_error(candidates[i], detector)) {
      ++flagged;
      score.penalized += s * (1.0 - penalty);
    } else {
      score.penalized += s;
    }
  }
  const auto count = static_cast<double>(candidates.size());
  score.penalized /= count;
  score.unpenalized /= count;
  score.error_rate = static_cast<double>(flagged) / count;
  return score;
}

TokenMetrics token_metrics(std::span<const Labels> predicted,
                           std::span<const Labels> gold) {
  if (predicted.size() != gold.size()) {
    throw Error("predicted and gold label sets differ in sentence count");
  }
  std::size_t correct = 0, total = 0;
  // confusion[g][p]
  std::size_t confusion[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t s = 0; s < gold.size(); ++s) {
    if (predicted[s].size() != gold[s].size()) {
      throw Error("sentence " + std::to_string(s) + ": " +
                  std::to_string(predicted[s].size()) + " predicted labels vs " +
                  std::to_string(gold[s].size()) + " gold labels");
    }
    for (std::size_t i = 0; i < gold[s].size(); ++i) {
      const int g = gold[s][i], p = predicted[s][i];
      if (g > 1 || p > 1) throw Error("labels must be 0 or 1");
      ++confusion[g][p];
      correct += g == p;
      ++total;
    }
  }
  TokenMetrics out;
  out.accuracy = total == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(total);
  f1_for_class(confusion[0][0], confusion[1][0], confusion[0][1], out.f1_delete);
  f1_for_class(confusion[1][1], confusion[0][1], confusion[1][0], out.f1_keep);
  out.macro_f1 = 0.5 * (out.f1_delete + out.f1_keep);
  return out;
}

EvaluationReport evaluate(std::span<const Tokens> candidates,
                          std::span<const References> references,
                          double penalty) {
  check_aligned(candidates, references);
  EvaluationReport report;
  report.count = candidates.size();
  report.bleu4 = 100.0 * bleu4(candidates, references);
  report.rouge_l = 100.0 * rouge_l(candidates, references);
  if (candidates.size() >= 2) {
    report.cider_d = 100.0 * cider_d(candidates, references);
  }
  const FluencyScore fluency =
      fluency_penalized_score(candidates, references, penalty);
  report.semantic_score = fluency.unpenalized;
  report.fluency_penalized_score = fluency.penalized;
  report.error_rate = fluency.error_rate;
  return report;
}

}  // namespace capfix
