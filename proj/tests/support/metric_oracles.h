#ifndef CAPFIX_TESTS_METRIC_ORACLES_H_
#define CAPFIX_TESTS_METRIC_ORACLES_H_

// Deliberately naive reference implementations, written without sharing any
// code with the library, for cross-checking on tiny corpora.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "capfix/corpus.h"

namespace capfix::oracle {

using Sentence = std::vector<std::string>;
using Gram = std::vector<std::string>;

inline std::map<Gram, int> count_grams(const Sentence& s, std::size_t n) {
  std::map<Gram, int> out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) {
    ++out[Gram(s.begin() + static_cast<long>(i), s.begin() + static_cast<long>(i + n))];
  }
  return out;
}

inline double bleu4(const std::vector<Sentence>& cands,
                    const std::vector<std::vector<Sentence>>& refs) {
  double m[4] = {0, 0, 0, 0}, t[4] = {0, 0, 0, 0};
  double c = 0, r = 0;
  for (std::size_t k = 0; k < cands.size(); ++k) {
    c += static_cast<double>(cands[k].size());
    // Closest reference length; on a tie the shorter one.
    std::vector<std::pair<long, long>> keyed;
    for (const auto& ref : refs[k]) {
      const long len = static_cast<long>(ref.size());
      keyed.push_back({std::labs(len - static_cast<long>(cands[k].size())), len});
    }
    r += static_cast<double>(std::min_element(keyed.begin(), keyed.end())->second);
    for (std::size_t n = 1; n <= 4; ++n) {
      for (const auto& [gram, count] : count_grams(cands[k], n)) {
        int cap = 0;
        for (const auto& ref : refs[k]) {
          const auto rc = count_grams(ref, n);
          auto it = rc.find(gram);
          if (it != rc.end()) cap = std::max(cap, it->second);
        }
        m[n - 1] += std::min(count, cap);
        t[n - 1] += count;
      }
    }
  }
  if (m[0] == 0) return 0;
  double product = 1;
  for (int n = 0; n < 4; ++n) {
    product *= (n >= 1 && m[n] == 0) ? (m[n] + 1) / (t[n] + 1) : m[n] / t[n];
  }
  const double bp = c > r ? 1.0 : std::exp(1 - r / c);
  return bp * std::pow(product, 0.25);
}

// LCS by trying every subsequence of the candidate, longest first.
inline std::size_t brute_lcs(const Sentence& a, const Sentence& b) {
  std::size_t best = 0;
  const std::size_t n = a.size();
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    Sentence sub;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) sub.push_back(a[i]);
    }
    if (sub.size() <= best) continue;
    std::size_t j = 0;
    for (const auto& w : b) {
      if (j < sub.size() && sub[j] == w) ++j;
    }
    if (j == sub.size()) best = sub.size();
  }
  return best;
}

inline double rouge_l(const std::vector<Sentence>& cands,
                      const std::vector<std::vector<Sentence>>& refs, double beta = 1.2) {
  double sum = 0;
  for (std::size_t k = 0; k < cands.size(); ++k) {
    double best = 0;
    for (const auto& ref : refs[k]) {
      const double l = static_cast<double>(brute_lcs(cands[k], ref));
      if (l == 0) continue;
      const double p = l / static_cast<double>(cands[k].size());
      const double rc = l / static_cast<double>(ref.size());
      best = std::max(best, (1 + beta * beta) * p * rc / (rc + beta * beta * p));
    }
    sum += best;
  }
  return sum / static_cast<double>(cands.size());
}

// CIDEr-D following the published reference code: raw term counts times
// log(N) - log(max(1, df)), clipped numerator min(h, r) * r, Gaussian length
// penalty, mean over orders and references, times 10.
inline double cider_d(const std::vector<Sentence>& cands,
                      const std::vector<std::vector<Sentence>>& refs, double sigma = 6) {
  const double N = static_cast<double>(refs.size());
  std::map<Gram, double> df;
  for (const auto& set : refs) {
    std::set<Gram> seen;
    for (const auto& ref : set) {
      for (std::size_t n = 1; n <= 4; ++n) {
        for (const auto& [g, c] : count_grams(ref, n)) seen.insert(g);
      }
    }
    for (const auto& g : seen) df[g] += 1;
  }
  auto weight = [&](const Gram& g, int tf) {
    const double d = df.count(g) ? df.at(g) : 0.0;
    return tf * (std::log(N) - std::log(std::max(1.0, d)));
  };
  double total = 0;
  for (std::size_t k = 0; k < cands.size(); ++k) {
    double per_candidate = 0;
    for (const auto& ref : refs[k]) {
      const double delta =
          static_cast<double>(cands[k].size()) - static_cast<double>(ref.size());
      double orders = 0;
      for (std::size_t n = 1; n <= 4; ++n) {
        const auto hc = count_grams(cands[k], n);
        const auto rc = count_grams(ref, n);
        double dot = 0, nh = 0, nr = 0;
        for (const auto& [g, c] : hc) nh += std::pow(weight(g, c), 2);
        for (const auto& [g, c] : rc) nr += std::pow(weight(g, c), 2);
        for (const auto& [g, c] : hc) {
          auto it = rc.find(g);
          if (it == rc.end()) continue;
          const double wh = weight(g, c), wr = weight(g, it->second);
          dot += std::min(wh, wr) * wr;
        }
        double sim = dot;
        if (nh > 0 && nr > 0) sim /= std::sqrt(nh) * std::sqrt(nr);
        orders += sim * std::exp(-delta * delta / (2 * sigma * sigma));
      }
      per_candidate += orders / 4;
    }
    total += 10 * per_candidate / static_cast<double>(refs[k].size());
  }
  return total / static_cast<double>(cands.size());
}

struct LabelScores {
  double accuracy;
  double macro_f1;
};

inline LabelScores token_scores(const std::vector<Labels>& pred, const std::vector<Labels>& gold) {
  double tp[2] = {0, 0}, fp[2] = {0, 0}, fn[2] = {0, 0}, right = 0, all = 0;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    for (std::size_t i = 0; i < gold[s].size(); ++i) {
      const int g = gold[s][i], p = pred[s][i];
      all += 1;
      if (g == p) {
        right += 1;
        tp[g] += 1;
      } else {
        fp[p] += 1;
        fn[g] += 1;
      }
    }
  }
  double f1_sum = 0;
  for (int c = 0; c < 2; ++c) {
    const double precision_den = tp[c] + fp[c], recall_den = tp[c] + fn[c];
    if (precision_den == 0 && recall_den == 0) {
      f1_sum += 1;
      continue;
    }
    const double p = precision_den ? tp[c] / precision_den : 0;
    const double r = recall_den ? tp[c] / recall_den : 0;
    f1_sum += (p + r) > 0 ? 2 * p * r / (p + r) : 0;
  }
  return {right / all, f1_sum / 2};
}

}  // namespace capfix::oracle

#endif  // CAPFIX_TESTS_METRIC_ORACLES_H_
