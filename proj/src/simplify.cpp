#include "poc/simplify.hpp"

#include <algorithm>
#include <cctype>

namespace poc {

const char* to_string(SimplifyCategory category) {
    switch (category) {
        case SimplifyCategory::Greeting: return "greeting";
        case SimplifyCategory::Pleasantry: return "pleasantry";
        case SimplifyCategory::Introduction: return "introduction";
        case SimplifyCategory::TechnicalProblem: return "technical_problem";
    }
    return "unknown";
}

SimplifyCategory parse_simplify_category(const std::string& text) {
    if (text == "greeting") return SimplifyCategory::Greeting;
    if (text == "pleasantry") return SimplifyCategory::Pleasantry;
    if (text == "introduction") return SimplifyCategory::Introduction;
    if (text == "technical_problem") return SimplifyCategory::TechnicalProblem;
    throw ValidationError("unknown simplify category: '" + text + "'");
}

namespace {

bool has_word_char(const std::string& s) {
    return std::any_of(s.begin(), s.end(), [](unsigned char c) {
        return c >= 0x80 || std::isalnum(c) != 0;
    });
}

std::string collapse_whitespace(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    bool in_space = true;  // also trims leading whitespace
    for (unsigned char c : s) {
        if (std::isspace(c)) {
            in_space = true;
            continue;
        }
        if (in_space && !out.empty()) out.push_back(' ');
        in_space = false;
        out.push_back(static_cast<char>(c));
    }
    return out;
}

// Sentence-ish segments: splits after '.', '?' or '!' runs.
std::vector<std::string> split_sentences(const std::string& s) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '.' || s[i] == '?' || s[i] == '!') {
            std::size_t end = i + 1;
            while (end < s.size() && (s[end] == '.' || s[end] == '?' || s[end] == '!')) ++end;
            parts.push_back(s.substr(start, end - start));
            i = end - 1;
            start = end;
        }
    }
    if (start < s.size()) parts.push_back(s.substr(start));
    return parts;
}

}  // namespace

SimplifyResult Simplifier::simplify(const std::string& text) const {
    SimplifyResult result;
    std::string working = collapse_whitespace(text);

    auto leading_match = [&](const std::string& s, const SimplifyRule& rule, std::smatch& m) {
        for (const auto& re : rule.compiled) {
            if (std::regex_search(s, m, re, std::regex_constants::match_continuous)) return true;
        }
        return false;
    };

    bool changed = true;
    while (changed) {
        changed = false;

        // Leading spans.
        for (const auto& rule : rules_.rules) {
            std::smatch m;
            while (!working.empty() && leading_match(working, rule, m) && m.length(0) > 0) {
                result.removed.push_back({rule.category, rule.id, m.str(0)});
                working = collapse_whitespace(working.substr(m.length(0)));
                changed = true;
            }
        }

        // Trailing spans: a match whose end coincides with the end of text.
        for (const auto& rule : rules_.rules) {
            for (const auto& re : rule.compiled) {
                std::smatch m;
                bool removed_one = true;
                while (removed_one) {
                    removed_one = false;
                    auto begin = std::sregex_iterator(working.begin(), working.end(), re);
                    auto end = std::sregex_iterator();
                    for (auto it = begin; it != end; ++it) {
                        std::size_t match_end =
                            static_cast<std::size_t>(it->position(0) + it->length(0));
                        if (match_end == working.size() && it->length(0) > 0) {
                            result.removed.push_back({rule.category, rule.id, it->str(0)});
                            working = collapse_whitespace(
                                working.substr(0, static_cast<std::size_t>(it->position(0))));
                            removed_one = true;
                            changed = true;
                            break;
                        }
                    }
                }
            }
        }

        // Standalone sentences wholly covered by one expression.
        auto sentences = split_sentences(working);
        if (sentences.size() > 1) {
            std::vector<std::string> kept;
            for (auto& sentence : sentences) {
                std::string norm = collapse_whitespace(sentence);
                bool drop = false;
                for (const auto& rule : rules_.rules) {
                    for (const auto& re : rule.compiled) {
                        std::smatch m;
                        if (std::regex_match(norm, m, re)) {
                            result.removed.push_back({rule.category, rule.id, norm});
                            drop = true;
                            break;
                        }
                    }
                    if (drop) break;
                }
                if (!drop) kept.push_back(norm);
            }
            if (kept.size() != sentences.size()) {
                std::string joined;
                for (const auto& part : kept) {
                    if (!joined.empty()) joined.push_back(' ');
                    joined += part;
                }
                working = joined;
                changed = true;
            }
        }

        if (!has_word_char(working)) break;
    }

    if (!has_word_char(working)) {
        // Removal would consume everything: return the original untouched.
        result.text = text;
        result.removed.clear();
        return result;
    }
    if (result.removed.empty()) {
        result.text = text;  // pattern-free input passes through verbatim
        return result;
    }
    result.text = working;
    return result;
}

SimplificationStats simplification_stats(
    const std::vector<std::pair<std::string, std::string>>& pairs) {
    if (pairs.empty()) {
        throw ValidationError("simplification_stats requires at least one decision");
    }
    std::size_t simplified = 0;
    double reduction_sum = 0.0;
    for (const auto& [original, after] : pairs) {
        if (after != original) ++simplified;
        if (!original.empty()) {
            double reduction =
                1.0 - static_cast<double>(after.size()) / static_cast<double>(original.size());
            reduction_sum += std::max(0.0, reduction);
        }
    }
    SimplificationStats stats;
    stats.fraction_simplified = static_cast<double>(simplified) / static_cast<double>(pairs.size());
    stats.mean_length_reduction = reduction_sum / static_cast<double>(pairs.size());
    return stats;
}

SimplificationStats simplification_stats(const std::vector<PurposeDecision>& decisions) {
    std::vector<std::pair<std::string, std::string>> pairs;
    pairs.reserve(decisions.size());
    for (const auto& d : decisions) pairs.emplace_back(d.original_text, d.simplified_text);
    return simplification_stats(pairs);
}

}  // namespace poc
