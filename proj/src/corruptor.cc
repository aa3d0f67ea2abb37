#include "capfix/corruptor.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "capfix/error.h"

namespace capfix {

// Generated from data/verb_stoplist.txt at configure time.
extern const char* const kVerbStoplistData;

namespace {

bool ends_with(std::string_view token, std::string_view suffix) {
  return token.size() > suffix.size() &&
         token.substr(token.size() - suffix.size()) == suffix;
}

std::set<std::string> parse_stoplist(std::istream& in) {
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    for (auto& token : tokenize(line)) words.insert(std::move(token));
  }
  return words;
}

const Tokens& pick(const std::vector<Tokens>& options, Rng& rng) {
  return options[uniform_index(rng, options.size())];
}

LabeledCaption keep_all(const Caption& clean) {
  LabeledCaption pair;
  pair.tokens = clean.tokens;
  pair.labels.assign(clean.tokens.size(), 1);
  pair.source_id = clean.id;
  return pair;
}

// Inserts `span` (labelled 0) before position `at`.
void insert_span(LabeledCaption& pair, std::size_t at, const Tokens& span) {
  pair.tokens.insert(pair.tokens.begin() + static_cast<std::ptrdiff_t>(at),
                     span.begin(), span.end());
  pair.labels.insert(pair.labels.begin() + static_cast<std::ptrdiff_t>(at),
                     span.size(), 0);
}

std::string join_phrases(const std::vector<Tokens>& phrases) {
  std::string out;
  for (std::size_t i = 0; i < phrases.size(); ++i) {
    if (i) out += " | ";
    out += join_tokens(phrases[i]);
  }
  return out;
}

}  // namespace

std::set<std::string> RuleConfig::default_verb_stoplist() {
  std::istringstream in(kVerbStoplistData);
  return parse_stoplist(in);
}

std::set<std::string> read_stoplist(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open verb stoplist " + path.string());
  return parse_stoplist(in);
}

void RuleConfig::validate() const {
  std::vector<std::string> problems;
  auto phrases_ok = [](const std::vector<Tokens>& phrases) {
    return !phrases.empty() &&
           std::all_of(phrases.begin(), phrases.end(), [](const Tokens& p) {
             return !p.empty() &&
                    std::none_of(p.begin(), p.end(),
                                 [](const std::string& t) { return t.empty(); });
           });
  };
  if (!phrases_ok(conjunctions)) problems.push_back("conjunctions must be a nonempty list of nonempty phrases");
  if (!phrases_ok(tails)) problems.push_back("tails must be a nonempty list of nonempty phrases");
  if (verb_suffixes.empty()) problems.push_back("verb_suffixes must be nonempty");
  if (adverb_suffix.empty()) problems.push_back("adverb_suffix must be nonempty");
  if (partial_min_len < 2) problems.push_back("partial_min_len must be >= 2");
  if (partial_max_len < partial_min_len) problems.push_back("partial_max_len must be >= partial_min_len");
  if (!problems.empty()) {
    std::string what = "invalid rule config:";
    for (const auto& p : problems) what += "\n  " + p;
    throw Error(what);
  }
}

std::string RuleConfig::canonical() const {
  std::ostringstream out;
  out << "conjunctions=" << join_phrases(conjunctions) << '\n'
      << "tails=" << join_phrases(tails) << '\n'
      << "verb_suffixes=" << join_tokens(verb_suffixes) << '\n'
      << "verb_stoplist=";
  bool first = true;
  for (const auto& word : verb_stoplist) {
    out << (first ? "" : " ") << word;
    first = false;
  }
  out << '\n'
      << "adverb_suffix=" << adverb_suffix << '\n'
      << "partial_min_len=" << partial_min_len << '\n'
      << "partial_max_len=" << partial_max_len << '\n'
      << "clean_pairs_per_sentence=" << clean_pairs_per_sentence << '\n';
  return out.str();
}

std::vector<std::size_t> find_verbs(std::span<const std::string> tokens,
                                    const RuleConfig& cfg) {
  std::vector<std::size_t> found;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (cfg.verb_stoplist.count(tokens[i])) continue;
    for (const auto& suffix : cfg.verb_suffixes) {
      if (ends_with(tokens[i], suffix)) {
        found.push_back(i);
        break;
      }
    }
  }
  return found;
}

std::vector<std::size_t> find_adverbs(std::span<const std::string> tokens,
                                      const RuleConfig& cfg) {
  std::vector<std::size_t> found;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (ends_with(tokens[i], cfg.adverb_suffix)) found.push_back(i);
  }
  return found;
}

std::optional<LabeledCaption> corrupt(const Caption& clean, RuleKind rule,
                                      const RuleConfig& cfg, Rng& rng) {
  if (clean.tokens.empty()) throw Error("cannot corrupt an empty caption");
  const std::size_t length = clean.tokens.size();
  LabeledCaption pair = keep_all(clean);
  pair.rule = rule;

  switch (rule) {
    case RuleKind::kVerbRepetition: {
      auto verbs = find_verbs(clean.tokens, cfg);
      if (verbs.empty()) return std::nullopt;
      std::size_t at = verbs[uniform_index(rng, verbs.size())];
      Tokens span = pick(cfg.conjunctions, rng);
      span.push_back(clean.tokens[at]);
      insert_span(pair, at + 1, span);
      break;
    }
    case RuleKind::kAdverbRepetition: {
      auto adverbs = find_adverbs(clean.tokens, cfg);
      if (adverbs.empty()) return std::nullopt;
      std::size_t at = adverbs[uniform_index(rng, adverbs.size())];
      insert_span(pair, at + 1, {clean.tokens[at]});
      break;
    }
    case RuleKind::kPartialRepetition: {
      if (length < 1 + cfg.partial_min_len) return std::nullopt;
      const std::size_t max_len = std::min(cfg.partial_max_len, length - 1);
      const std::size_t k =
          cfg.partial_min_len +
          uniform_index(rng, max_len - cfg.partial_min_len + 1);
      Tokens span = pick(cfg.conjunctions, rng);
      span.insert(span.end(), clean.tokens.end() - static_cast<std::ptrdiff_t>(k),
                  clean.tokens.end());
      insert_span(pair, length, span);
      break;
    }
    case RuleKind::kSentenceRepetition: {
      Tokens span = pick(cfg.conjunctions, rng);
      span.insert(span.end(), clean.tokens.begin(), clean.tokens.end());
      insert_span(pair, length, span);
      break;
    }
    case RuleKind::kExtraTails: {
      insert_span(pair, length, pick(cfg.tails, rng));
      break;
    }
  }
  return pair;
}

std::vector<LabeledCaption> corrupt_sentence(const Caption& clean,
                                             const RuleConfig& cfg,
                                             std::uint64_t seed) {
  if (clean.tokens.empty()) {
    throw Error("caption \"" + clean.id + "\" is empty");
  }
  Rng rng(stable_hash(clean.id, seed));
  std::vector<LabeledCaption> pairs;
  pairs.reserve(kAllRules.size() + cfg.clean_pairs_per_sentence);
  for (RuleKind rule : kAllRules) {
    auto pair = corrupt(clean, rule, cfg, rng);
    if (!pair) pair = corrupt(clean, RuleKind::kSentenceRepetition, cfg, rng);
    pairs.push_back(std::move(*pair));
  }
  for (std::size_t i = 0; i < cfg.clean_pairs_per_sentence; ++i) {
    pairs.push_back(keep_all(clean));
  }
  return pairs;
}

DatasetSplits generate_dataset(std::span<const Caption> corpus,
                               const RuleConfig& cfg, SplitRatios ratios,
                               std::uint64_t seed, int threads) {
  cfg.validate();
  if (corpus.empty()) throw Error("cannot generate a dataset from an empty corpus");
  if (!(ratios.train > 0 && ratios.validation > 0 && ratios.test > 0) ||
      std::abs(ratios.train + ratios.validation + ratios.test - 1.0) > 1e-9) {
    throw Error("split ratios must be positive and sum to 1");
  }
  for (const auto& caption : corpus) {
    if (caption.tokens.empty()) {
      throw Error("caption \"" + caption.id + "\" is empty");
    }
  }

  const std::size_t n = corpus.size();
  std::vector<std::vector<LabeledCaption>> per_sentence(n);
  const std::size_t workers =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), 1, n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      per_sentence[i] = corrupt_sentence(corpus[i], cfg, seed);
    }
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < n; i += workers) {
          per_sentence[i] = corrupt_sentence(corpus[i], cfg, seed);
        }
      });
    }
  }

  // Rank sentences by hash; ties (equal hashes) fall back to corpus order.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::vector<std::uint64_t> keys(n);
  for (std::size_t i = 0; i < n; ++i) keys[i] = stable_hash(corpus[i].id, seed);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });

  const auto n_train = static_cast<std::size_t>(std::llround(ratios.train * n));
  const auto n_val = std::min(
      n - n_train, static_cast<std::size_t>(std::llround(ratios.validation * n)));
  std::vector<int> split_of(n, 2);
  for (std::size_t r = 0; r < n; ++r) {
    split_of[order[r]] = r < n_train ? 0 : (r < n_train + n_val ? 1 : 2);
  }

  DatasetSplits splits;
  splits.split_seed = seed;
  for (std::size_t i = 0; i < n; ++i) {
    auto& dest = split_of[i] == 0   ? splits.train
                 : split_of[i] == 1 ? splits.validation
                                    : splits.test;
    for (auto& pair : per_sentence[i]) dest.push_back(std::move(pair));
  }
  return splits;
}

}  // namespace capfix
