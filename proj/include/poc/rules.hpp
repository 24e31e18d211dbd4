#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "poc/simplify.hpp"
#include "poc/types.hpp"

namespace poc {

// One declarative rule: a tag plus the regular expressions that detect it.
// min_tokens / max_utterance_index are qualification constraints applied by
// rule_classify, not by plain pattern matching.
struct Rule {
    std::string id;
    PatternTag tag = PatternTag::NegativeFilter;
    std::vector<std::string> expressions;
    std::vector<std::regex> compiled;
    std::optional<std::uint32_t> min_tokens;
    std::optional<std::uint32_t> max_utterance_index;  // exclusive, 0-based
};

struct RuleSet {
    std::vector<Rule> positive_rules;  // purpose-candidate detectors
    std::vector<Rule> negative_rules;  // negative-statement filters (veto)
    std::vector<Rule> prompt_rules;    // agent solicitations ("how can I help you")

    std::size_t expression_count() const;
    bool empty() const {
        return positive_rules.empty() && negative_rules.empty() && prompt_rules.empty();
    }
};

struct PatternMatch {
    PatternTag tag = PatternTag::NegativeFilter;
    std::size_t begin = 0;  // character interval within the utterance text
    std::size_t end = 0;
    std::string rule_id;
};

// What the matcher needs to know about one preceding utterance.
struct ContextUtterance {
    std::uint32_t index = 0;
    CallSide side = CallSide::Customer;
    bool prompt_matched = false;
    bool purpose_phrase_matched = false;
};

// Up to the two most recent preceding utterances per side, most recent first.
struct MatchContext {
    std::vector<ContextUtterance> recent_agent;
    std::vector<ContextUtterance> recent_customer;

    const std::vector<ContextUtterance>& for_side(CallSide side) const {
        return side == CallSide::Agent ? recent_agent : recent_customer;
    }
    bool prompt_on_side(CallSide side, std::size_t lookback) const;
    bool purpose_phrase_on_side(CallSide side, std::size_t lookback) const;
};

// Per-utterance flags other utterances later consume as context.
struct ContextFlags {
    bool prompt_matched = false;
    bool purpose_phrase_matched = false;
};

// Matches utterances against a compiled RuleSet. Matching is case-insensitive
// over the raw text; expressions never span utterance boundaries. Contextual
// tag semantics are enforced here:
//   - Greeting fires only on utterances of at least 30 word tokens within the
//     first 6 utterances of the call whose prefix matches a greeting rule.
//   - QuestionResponse fires only when a prompt matched one of the two most
//     recent utterances from the other call side.
//   - Continuation fires only when a signpost (call-purpose phrase) matched
//     the same utterance or the previous utterance by the same speaker.
class PatternEngine {
public:
    static constexpr std::uint32_t kGreetingMinTokens = 30;
    static constexpr std::uint32_t kGreetingMaxIndex = 6;  // exclusive
    static constexpr std::size_t kPromptLookback = 2;
    static constexpr std::size_t kSignpostLookback = 1;

    explicit PatternEngine(RuleSet rules) : rules_(std::move(rules)) {}

    // All positive-tag and prompt matches for the utterance given its context.
    std::vector<PatternMatch> match_patterns(const Utterance& utterance,
                                             const MatchContext& context) const;

    // True iff any negative rule matches; a true result vetoes the rule
    // scorer's purpose assignment.
    bool is_negative_filtered(const Utterance& utterance) const;

    bool matches_prompt(const Utterance& utterance) const;

    // Cheap flags computed for every utterance, gated or not, so that later
    // utterances have their context available.
    ContextFlags context_flags(const Utterance& utterance) const;

    // Tags qualifying the utterance as a purpose-of-call candidate: matched
    // positive tags whose rule constraints (min_tokens, max_utterance_index)
    // hold, unless a negative rule vetoes the utterance.
    std::set<PatternTag> rule_classify(const Utterance& utterance,
                                       const MatchContext& context) const;

    const RuleSet& rules() const noexcept { return rules_; }

private:
    RuleSet rules_;
};

// Everything a rules file can carry: the pattern rules themselves plus the
// simplification rules and the bootstrap false-positive filters that share
// the file format.
struct RuleBundle {
    RuleSet patterns;
    SimplificationRuleSet simplification;
    std::vector<Rule> false_positive_rules;
};

// Loads the declarative rules file. The load is atomic: any non-compiling
// expression or malformed record fails the whole load, naming the rule and
// the offending expression. See data/default.rules for the format.
RuleBundle load_rules(const std::filesystem::path& path);
RuleBundle parse_rules(std::istream& in, const std::string& origin);

}  // namespace poc
