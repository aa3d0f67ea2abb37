#ifndef CAPFIX_RULE_KIND_H_
#define CAPFIX_RULE_KIND_H_

#include <array>
#include <optional>
#include <string_view>

namespace capfix {

// The five false-repetition corruption rules.
enum class RuleKind {
  kVerbRepetition,
  kAdverbRepetition,
  kPartialRepetition,
  kSentenceRepetition,
  kExtraTails,
};

inline constexpr std::array<RuleKind, 5> kAllRules = {
    RuleKind::kVerbRepetition, RuleKind::kAdverbRepetition,
    RuleKind::kPartialRepetition, RuleKind::kSentenceRepetition,
    RuleKind::kExtraTails};

// Stable on-disk names, e.g. "verb_repetition".
std::string_view rule_name(RuleKind kind);
std::optional<RuleKind> parse_rule(std::string_view name);

}  // namespace capfix

#endif  // CAPFIX_RULE_KIND_H_
