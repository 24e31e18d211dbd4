#pragma once

#include <cstdint>
#include <regex>
#include <string>
#include <vector>

#include "poc/types.hpp"

namespace poc {

enum class SimplifyCategory : std::uint8_t { Greeting, Pleasantry, Introduction, TechnicalProblem };

const char* to_string(SimplifyCategory category);
SimplifyCategory parse_simplify_category(const std::string& text);

struct SimplifyRule {
    std::string id;
    SimplifyCategory category = SimplifyCategory::Pleasantry;
    std::vector<std::string> expressions;
    std::vector<std::regex> compiled;
};

struct SimplificationRuleSet {
    std::vector<SimplifyRule> rules;
};

struct RemovedSpan {
    SimplifyCategory category;
    std::string rule_id;
    std::string text;  // the removed characters
};

struct SimplifyResult {
    std::string text;
    std::vector<RemovedSpan> removed;
    bool simplified() const noexcept { return !removed.empty(); }
};

// Strips purpose-irrelevant spans (greetings, pleasantries, introductions,
// trouble-hearing phrases). Removal is conservative: leading spans, trailing
// spans, and whole pleasantry sentences only, never mid-sentence deletions.
// Pattern-free input is returned verbatim; if removal would consume all
// content the original text is returned instead.
class Simplifier {
public:
    explicit Simplifier(SimplificationRuleSet rules) : rules_(std::move(rules)) {}

    SimplifyResult simplify(const std::string& text) const;

private:
    SimplificationRuleSet rules_;
};

struct SimplificationStats {
    double fraction_simplified = 0.0;    // decisions with at least one removed span
    double mean_length_reduction = 0.0;  // mean relative character-length reduction
};

// Aggregates over (original, simplified) text pairs; errors on an empty corpus.
SimplificationStats simplification_stats(const std::vector<std::pair<std::string, std::string>>& pairs);
SimplificationStats simplification_stats(const std::vector<PurposeDecision>& decisions);

}  // namespace poc
