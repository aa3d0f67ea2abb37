#include "capfix/corpus.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

#include "capfix/error.h"

namespace capfix {
namespace {

using Json = nlohmann::ordered_json;

bool is_space(unsigned char c) { return std::isspace(c) != 0; }

template <typename Fn>
void for_each_line(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(),
                    [](char c) { return is_space(c); })) {
      continue;
    }
    Json record;
    try {
      record = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": malformed JSON: " + e.what());
    }
    try {
      fn(record, line_no);
    } catch (const FormatError&) {
      throw;
    } catch (const std::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " +
                        e.what());
    }
  }
}

[[noreturn]] void fail_line(const std::filesystem::path& path,
                            std::size_t line_no, const std::string& what) {
  throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " +
                    what);
}

const Json& require(const Json& record, const char* key,
                    const std::filesystem::path& path, std::size_t line_no) {
  if (!record.is_object()) fail_line(path, line_no, "record is not an object");
  auto it = record.find(key);
  if (it == record.end()) {
    fail_line(path, line_no, std::string("missing field \"") + key + "\"");
  }
  return *it;
}

std::string require_string(const Json& record, const char* key,
                           const std::filesystem::path& path,
                           std::size_t line_no) {
  const Json& value = require(record, key, path, line_no);
  if (!value.is_string()) {
    fail_line(path, line_no, std::string("\"") + key + "\" is not a string");
  }
  return value.get<std::string>();
}

template <typename Records, typename ToJson>
std::string to_jsonl(const Records& records, ToJson&& to_json) {
  std::string out;
  for (const auto& record : records) {
    out += to_json(record).dump();
    out += '\n';
  }
  return out;
}

template <typename Counted>
Vocabulary vocab_from_counts(const Counted& counts, int min_count) {
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [token, count] : counts) {
    if (count >= static_cast<std::size_t>(std::max(min_count, 1))) {
      kept.emplace_back(token, count);
    }
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> index_to_token = {
      std::string(Vocabulary::kPadToken), std::string(Vocabulary::kUnkToken)};
  for (auto& [token, count] : kept) index_to_token.push_back(token);
  return Vocabulary(std::move(index_to_token));
}

}  // namespace

Tokens tokenize(std::string_view raw) {
  Tokens tokens;
  std::string current;
  for (char ch : raw) {
    auto c = static_cast<unsigned char>(ch);
    if (is_space(c)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else if (c < 0x80 && std::ispunct(c)) {
      continue;
    } else {
      current.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

Tokens kept_tokens(const LabeledCaption& pair) {
  Tokens kept;
  for (std::size_t i = 0; i < pair.tokens.size() && i < pair.labels.size();
       ++i) {
    if (pair.labels[i] == 1) kept.push_back(pair.tokens[i]);
  }
  return kept;
}

Vocabulary::Vocabulary()
    : Vocabulary({std::string(kPadToken), std::string(kUnkToken)}) {}

Vocabulary::Vocabulary(std::vector<std::string> index_to_token)
    : index_to_token_(std::move(index_to_token)) {
  if (index_to_token_.size() < 2 || index_to_token_[kPad] != kPadToken ||
      index_to_token_[kUnk] != kUnkToken) {
    throw Error("vocabulary must start with <pad> and <unk>");
  }
  token_to_index_.reserve(index_to_token_.size());
  for (std::size_t i = 0; i < index_to_token_.size(); ++i) {
    if (index_to_token_[i].empty()) throw Error("vocabulary has empty token");
    auto [it, inserted] =
        token_to_index_.emplace(index_to_token_[i], static_cast<int>(i));
    if (!inserted) {
      throw Error("duplicate vocabulary token \"" + index_to_token_[i] + "\"");
    }
  }
}

bool Vocabulary::contains(std::string_view token) const {
  return token_to_index_.count(std::string(token)) > 0;
}

int Vocabulary::index_of(std::string_view token) const {
  auto it = token_to_index_.find(std::string(token));
  return it == token_to_index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token_at(int index) const {
  if (index < 0 || static_cast<std::size_t>(index) >= index_to_token_.size()) {
    throw Error("vocabulary index " + std::to_string(index) +
                " out of range [0, " + std::to_string(index_to_token_.size()) +
                ")");
  }
  return index_to_token_[static_cast<std::size_t>(index)];
}

std::vector<int> Vocabulary::encode(std::span<const std::string> tokens) const {
  std::vector<int> indices;
  indices.reserve(tokens.size());
  for (const auto& token : tokens) indices.push_back(index_of(token));
  return indices;
}

Tokens Vocabulary::decode(std::span<const int> indices) const {
  Tokens tokens;
  tokens.reserve(indices.size());
  for (int index : indices) tokens.push_back(token_at(index));
  return tokens;
}

Vocabulary build_vocab(std::span<const Caption> corpus, int min_count) {
  std::map<std::string, std::size_t> counts;
  for (const auto& caption : corpus) {
    for (const auto& token : caption.tokens) ++counts[token];
  }
  return vocab_from_counts(counts, min_count);
}

Vocabulary build_vocab(std::span<const LabeledCaption> corpus, int min_count) {
  std::map<std::string, std::size_t> counts;
  for (const auto& pair : corpus) {
    for (const auto& token : pair.tokens) ++counts[token];
  }
  return vocab_from_counts(counts, min_count);
}

std::vector<Caption> load_captions(const std::filesystem::path& path) {
  std::vector<Caption> captions;
  std::unordered_set<std::string> seen;
  for_each_line(path, [&](const Json& record, std::size_t line_no) {
    Caption caption;
    caption.id = require_string(record, "id", path, line_no);
    caption.tokens =
        tokenize(require_string(record, "caption", path, line_no));
    if (caption.tokens.empty()) fail_line(path, line_no, "empty caption");
    if (!seen.insert(caption.id).second) {
      fail_line(path, line_no, "duplicate id \"" + caption.id + "\"");
    }
    captions.push_back(std::move(caption));
  });
  return captions;
}

void save_captions(const std::filesystem::path& path,
                   std::span<const Caption> captions) {
  write_file_atomic(path, to_jsonl(captions, [](const Caption& c) {
                      Json j;
                      j["id"] = c.id;
                      j["caption"] = join_tokens(c.tokens);
                      return j;
                    }));
}

std::vector<LabeledCaption> load_labeled(const std::filesystem::path& path) {
  std::vector<LabeledCaption> pairs;
  for_each_line(path, [&](const Json& record, std::size_t line_no) {
    LabeledCaption pair;
    pair.source_id = require_string(record, "source_id", path, line_no);
    const Json& tokens = require(record, "tokens", path, line_no);
    const Json& labels = require(record, "labels", path, line_no);
    const Json& rule = require(record, "rule", path, line_no);
    if (!tokens.is_array() || !labels.is_array()) {
      fail_line(path, line_no, "\"tokens\" and \"labels\" must be arrays");
    }
    for (const Json& token : tokens) {
      if (!token.is_string()) fail_line(path, line_no, "non-string token");
      auto text = token.get<std::string>();
      if (text.empty() || std::any_of(text.begin(), text.end(), [](char c) {
            return is_space(static_cast<unsigned char>(c));
          })) {
        fail_line(path, line_no, "token is empty or contains whitespace");
      }
      if (text == Vocabulary::kPadToken || text == Vocabulary::kUnkToken) {
        fail_line(path, line_no, "reserved token \"" + text + "\"");
      }
      pair.tokens.push_back(std::move(text));
    }
    for (const Json& label : labels) {
      if (!label.is_number_integer() ||
          (label.get<int>() != 0 && label.get<int>() != 1)) {
        fail_line(path, line_no, "labels must be 0 or 1");
      }
      pair.labels.push_back(static_cast<std::uint8_t>(label.get<int>()));
    }
    if (pair.tokens.empty()) fail_line(path, line_no, "empty token sequence");
    if (pair.tokens.size() != pair.labels.size()) {
      fail_line(path, line_no, "tokens and labels differ in length");
    }
    if (!rule.is_null()) {
      if (!rule.is_string()) fail_line(path, line_no, "\"rule\" must be a string or null");
      auto kind = parse_rule(rule.get<std::string>());
      if (!kind) {
        fail_line(path, line_no, "unknown rule \"" + rule.get<std::string>() + "\"");
      }
      pair.rule = kind;
    }
    pairs.push_back(std::move(pair));
  });
  return pairs;
}

void save_labeled(const std::filesystem::path& path,
                  std::span<const LabeledCaption> pairs) {
  write_file_atomic(path, to_jsonl(pairs, [](const LabeledCaption& p) {
                      Json j;
                      j["source_id"] = p.source_id;
                      j["tokens"] = p.tokens;
                      Json labels = Json::array();
                      for (auto label : p.labels) labels.push_back(int{label});
                      j["labels"] = std::move(labels);
                      j["rule"] = p.rule ? Json(std::string(rule_name(*p.rule)))
                                         : Json(nullptr);
                      return j;
                    }));
}

std::vector<ReferenceSet> load_references(const std::filesystem::path& path) {
  std::vector<ReferenceSet> references;
  std::unordered_set<std::string> seen;
  for_each_line(path, [&](const Json& record, std::size_t line_no) {
    ReferenceSet set;
    set.id = require_string(record, "id", path, line_no);
    const Json& captions = require(record, "captions", path, line_no);
    if (!captions.is_array() || captions.empty()) {
      fail_line(path, line_no, "\"captions\" must be a nonempty array");
    }
    for (const Json& caption : captions) {
      if (!caption.is_string()) fail_line(path, line_no, "non-string caption");
      Tokens tokens = tokenize(caption.get<std::string>());
      if (tokens.empty()) fail_line(path, line_no, "empty reference caption");
      set.captions.push_back(std::move(tokens));
    }
    if (!seen.insert(set.id).second) {
      fail_line(path, line_no, "duplicate id \"" + set.id + "\"");
    }
    references.push_back(std::move(set));
  });
  return references;
}

void save_references(const std::filesystem::path& path,
                     std::span<const ReferenceSet> references) {
  write_file_atomic(path, to_jsonl(references, [](const ReferenceSet& r) {
                      Json j;
                      j["id"] = r.id;
                      Json captions = Json::array();
                      for (const auto& c : r.captions) {
                        captions.push_back(join_tokens(c));
                      }
                      j["captions"] = std::move(captions);
                      return j;
                    }));
}

void write_file_atomic(const std::filesystem::path& path,
                       std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw Error("failed writing " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace capfix
