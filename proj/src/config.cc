#include "capfix/config.h"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "capfix/error.h"

namespace capfix {
namespace {

namespace pt = boost::property_tree;

class SectionReader {
 public:
  SectionReader(std::string name, const pt::ptree* tree, std::vector<std::string>& bad)
      : name_(std::move(name)), bad_(bad) {
    if (!tree) return;
    for (const auto& [key, child] : *tree) {
      if (!child.empty()) {
        bad_.push_back(name_ + "." + key + " (nested value)");
        continue;
      }
      values_[key] = boost::trim_copy(child.data());
    }
  }

  const std::string* take(const std::string& key) {
    auto it = values_.find(key);
    if (it == values_.end()) return nullptr;
    taken_.push_back(key);
    return &it->second;
  }

  template <typename T>
  void number(const std::string& key, T& out) {
    const std::string* text = take(key);
    if (!text) return;
    const char* end = text->data() + text->size();
    auto res = std::from_chars(text->data(), end, out);
    if (res.ec != std::errc() || res.ptr != end) {
      bad_.push_back(name_ + "." + key + " = " + *text + " (not a number)");
    }
  }

  void path(const std::string& key, std::filesystem::path& out,
            const std::filesystem::path& base) {
    if (const std::string* text = take(key)) {
      if (text->empty()) {
        bad_.push_back(name_ + "." + key + " (empty path)");
      } else {
        out = base / *text;
      }
    }
  }

  // Remaining keys feed the training config, which reports its own unknowns.
  std::map<std::string, std::string> rest() const {
    std::map<std::string, std::string> out;
    for (const auto& [key, value] : values_) {
      if (std::find(taken_.begin(), taken_.end(), key) == taken_.end()) out[key] = value;
    }
    return out;
  }

  void reject_rest() const {
    for (const auto& [key, value] : rest()) bad_.push_back(name_ + "." + key + " (unknown key)");
  }

  const std::string& name() const { return name_; }

 private:
  std::string name_;
  std::map<std::string, std::string> values_;
  std::vector<std::string> taken_;
  std::vector<std::string>& bad_;
};

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> out;
  boost::split(out, text, boost::is_any_of(" \t,"), boost::token_compress_on);
  std::erase_if(out, [](const std::string& s) { return s.empty(); });
  return out;
}

// "and | while | and then"
std::vector<Tokens> split_phrases(const std::string& text) {
  std::vector<std::string> parts;
  boost::split(parts, text, boost::is_any_of("|"));
  std::vector<Tokens> out;
  for (const auto& part : parts) {
    auto words = split_words(part);
    if (!words.empty()) out.push_back(std::move(words));
  }
  return out;
}

}  // namespace

AppConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error("config: " + e.message() + " at line " + std::to_string(e.line()));
  }

  std::vector<std::string> bad;
  AppConfig cfg;
  for (const auto& [key, child] : tree) {
    if (child.empty()) {
      bad.push_back(key + " (key outside a section)");
    } else if (key != "generate" && key != "corruption" && key != "train") {
      bad.push_back("[" + key + "] (unknown section)");
    }
  }
  auto section = [&](const char* name) {
    auto child = tree.get_child_optional(name);
    return SectionReader(name, child ? &*child : nullptr, bad);
  };

  SectionReader gen = section("generate");
  gen.path("input", cfg.generate.input, base_dir);
  cfg.generate.output_dir = base_dir / "generated";
  gen.path("output_dir", cfg.generate.output_dir, base_dir);
  gen.number("seed", cfg.generate.seed);
  gen.number("train_ratio", cfg.generate.ratios.train);
  gen.number("validation_ratio", cfg.generate.ratios.validation);
  gen.number("test_ratio", cfg.generate.ratios.test);
  gen.number("threads", cfg.generate.threads);
  gen.reject_rest();

  SectionReader cor = section("corruption");
  if (auto* v = cor.take("conjunctions")) cfg.rules.conjunctions = split_phrases(*v);
  if (auto* v = cor.take("tails")) cfg.rules.tails = split_phrases(*v);
  if (auto* v = cor.take("verb_suffixes")) cfg.rules.verb_suffixes = split_words(*v);
  std::filesystem::path stoplist;
  cor.path("verb_stoplist", stoplist, base_dir);
  if (auto* v = cor.take("adverb_suffix")) cfg.rules.adverb_suffix = *v;
  cor.number("partial_min_len", cfg.rules.partial_min_len);
  cor.number("partial_max_len", cfg.rules.partial_max_len);
  cor.number("clean_pairs_per_sentence", cfg.rules.clean_pairs_per_sentence);
  cor.reject_rest();

  SectionReader tr = section("train");
  cfg.train.data_dir = cfg.generate.output_dir;
  tr.path("data_dir", cfg.train.data_dir, base_dir);
  cfg.train.checkpoint = cfg.train.data_dir / "model.ckpt";
  cfg.train.log = cfg.train.data_dir / "train_log.csv";
  tr.path("checkpoint", cfg.train.checkpoint, base_dir);
  tr.path("log", cfg.train.log, base_dir);
  std::vector<std::string> unknown;
  try {
    auto defaults = neural::TrainingConfig::desk().to_map();
    for (const auto& [key, value] : tr.rest()) defaults[key] = value;
    cfg.train.training = neural::TrainingConfig::from_map(defaults, &unknown);
  } catch (const Error& e) {
    bad.push_back(std::string("[train] ") + e.what());
  }
  for (const auto& key : unknown) bad.push_back("train." + key + " (unknown key)");

  if (!bad.empty()) {
    std::string what = "invalid config:";
    for (const auto& b : bad) what += "\n  " + b;
    throw Error(what);
  }
  if (!stoplist.empty()) cfg.rules.verb_stoplist = read_stoplist(stoplist);
  cfg.rules.validate();
  cfg.train.training.validate();
  const auto& r = cfg.generate.ratios;
  if (r.train < 0 || r.validation < 0 || r.test < 0 ||
      std::abs(r.train + r.validation + r.test - 1.0) > 1e-9) {
    throw Error("invalid config: split ratios must be non-negative and sum to 1");
  }
  if (cfg.generate.threads < 1) throw Error("invalid config: generate.threads must be >= 1");
  return cfg;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str(), path.parent_path());
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

}  // namespace capfix
