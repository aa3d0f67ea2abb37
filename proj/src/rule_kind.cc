#include "capfix/rule_kind.h"

namespace capfix {

std::string_view rule_name(RuleKind kind) {
  switch (kind) {
    case RuleKind::kVerbRepetition:
      return "verb_repetition";
    case RuleKind::kAdverbRepetition:
      return "adverb_repetition";
    case RuleKind::kPartialRepetition:
      return "partial_repetition";
    case RuleKind::kSentenceRepetition:
      return "sentence_repetition";
    case RuleKind::kExtraTails:
      return "extra_tails";
  }
  return "unknown";
}

std::optional<RuleKind> parse_rule(std::string_view name) {
  for (RuleKind kind : kAllRules) {
    if (rule_name(kind) == name) return kind;
  }
  return std::nullopt;
}

}  // namespace capfix
