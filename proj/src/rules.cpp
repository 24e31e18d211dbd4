#include "poc/rules.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace poc {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

constexpr auto kRegexFlags = std::regex::ECMAScript | std::regex::icase | std::regex::optimize;

std::regex compile_expression(const std::string& rule_id, const std::string& expr) {
    try {
        return std::regex(expr, kRegexFlags);
    } catch (const std::regex_error& e) {
        throw ParseError("rule '" + rule_id + "': expression does not compile: /" + expr +
                         "/ (" + e.what() + ")");
    }
}

struct PendingRecord {
    enum class Kind { Pattern, Simplify, FalsePositive } kind = Kind::Pattern;
    std::size_t line = 0;
    std::string id;
    std::optional<PatternTag> tag;
    std::optional<SimplifyCategory> category;
    std::optional<std::uint32_t> min_tokens;
    std::optional<std::uint32_t> max_utterance_index;
    std::vector<std::string> expressions;
};

std::uint32_t parse_uint(const std::string& value, std::size_t line, const std::string& key) {
    try {
        std::size_t pos = 0;
        unsigned long v = std::stoul(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return static_cast<std::uint32_t>(v);
    } catch (const std::exception&) {
        throw ParseError("invalid " + key + " value: '" + value + "'", line);
    }
}

}  // namespace

bool MatchContext::prompt_on_side(CallSide side, std::size_t lookback) const {
    const auto& entries = for_side(side);
    for (std::size_t i = 0; i < entries.size() && i < lookback; ++i) {
        if (entries[i].prompt_matched) return true;
    }
    return false;
}

bool MatchContext::purpose_phrase_on_side(CallSide side, std::size_t lookback) const {
    const auto& entries = for_side(side);
    for (std::size_t i = 0; i < entries.size() && i < lookback; ++i) {
        if (entries[i].purpose_phrase_matched) return true;
    }
    return false;
}

std::size_t RuleSet::expression_count() const {
    std::size_t n = 0;
    for (const auto& r : positive_rules) n += r.expressions.size();
    for (const auto& r : negative_rules) n += r.expressions.size();
    for (const auto& r : prompt_rules) n += r.expressions.size();
    return n;
}

std::vector<PatternMatch> PatternEngine::match_patterns(const Utterance& utterance,
                                                        const MatchContext& context) const {
    std::vector<PatternMatch> out;

    // First pass: raw expression hits per positive rule (first matching
    // expression wins the span).
    struct RawHit {
        const Rule* rule;
        std::size_t begin;
        std::size_t end;
    };
    std::vector<RawHit> hits;
    for (const auto& rule : rules_.positive_rules) {
        for (const auto& re : rule.compiled) {
            std::smatch m;
            if (std::regex_search(utterance.text, m, re)) {
                hits.push_back({&rule, static_cast<std::size_t>(m.position(0)),
                                static_cast<std::size_t>(m.position(0) + m.length(0))});
                break;
            }
        }
    }

    const bool has_call_purpose_hit =
        std::any_of(hits.begin(), hits.end(),
                    [](const RawHit& h) { return h.rule->tag == PatternTag::CallPurposePhrase; });

    for (const auto& hit : hits) {
        switch (hit.rule->tag) {
            case PatternTag::Greeting:
                if (utterance.token_count < kGreetingMinTokens) continue;
                if (utterance.index >= kGreetingMaxIndex) continue;
                break;
            case PatternTag::QuestionResponse:
                if (!context.prompt_on_side(opposite(utterance.side), kPromptLookback)) continue;
                break;
            case PatternTag::Continuation:
                if (!has_call_purpose_hit &&
                    !context.purpose_phrase_on_side(utterance.side, kSignpostLookback))
                    continue;
                break;
            default:
                break;
        }
        out.push_back({hit.rule->tag, hit.begin, hit.end, hit.rule->id});
    }

    bool prompt_found = false;
    for (const auto& rule : rules_.prompt_rules) {
        for (const auto& re : rule.compiled) {
            std::smatch m;
            if (std::regex_search(utterance.text, m, re)) {
                out.push_back({PatternTag::QuestionPrompt, static_cast<std::size_t>(m.position(0)),
                               static_cast<std::size_t>(m.position(0) + m.length(0)), rule.id});
                prompt_found = true;
                break;
            }
        }
        if (prompt_found) break;
    }

    return out;
}

bool PatternEngine::is_negative_filtered(const Utterance& utterance) const {
    for (const auto& rule : rules_.negative_rules) {
        for (const auto& re : rule.compiled) {
            if (std::regex_search(utterance.text, re)) return true;
        }
    }
    return false;
}

bool PatternEngine::matches_prompt(const Utterance& utterance) const {
    for (const auto& rule : rules_.prompt_rules) {
        for (const auto& re : rule.compiled) {
            if (std::regex_search(utterance.text, re)) return true;
        }
    }
    return false;
}

ContextFlags PatternEngine::context_flags(const Utterance& utterance) const {
    ContextFlags flags;
    flags.prompt_matched = matches_prompt(utterance);
    for (const auto& rule : rules_.positive_rules) {
        if (rule.tag != PatternTag::CallPurposePhrase) continue;
        for (const auto& re : rule.compiled) {
            if (std::regex_search(utterance.text, re)) {
                flags.purpose_phrase_matched = true;
                break;
            }
        }
        if (flags.purpose_phrase_matched) break;
    }
    return flags;
}

std::set<PatternTag> PatternEngine::rule_classify(const Utterance& utterance,
                                                  const MatchContext& context) const {
    std::set<PatternTag> tags;
    auto matches = match_patterns(utterance, context);
    if (matches.empty()) return tags;
    if (is_negative_filtered(utterance)) return tags;  // veto takes precedence

    for (const auto& match : matches) {
        if (match.tag == PatternTag::QuestionPrompt) continue;
        auto rule_it = std::find_if(rules_.positive_rules.begin(), rules_.positive_rules.end(),
                                    [&](const Rule& r) { return r.id == match.rule_id; });
        if (rule_it == rules_.positive_rules.end()) continue;
        if (rule_it->min_tokens && utterance.token_count < *rule_it->min_tokens) continue;
        if (rule_it->max_utterance_index && utterance.index >= *rule_it->max_utterance_index)
            continue;
        tags.insert(match.tag);
    }
    return tags;
}

RuleBundle parse_rules(std::istream& in, const std::string& origin) {
    std::vector<PendingRecord> records;
    PendingRecord* current = nullptr;
    std::string raw;
    std::size_t line_no = 0;

    auto begin_record = [&](PendingRecord::Kind kind) {
        records.push_back({});
        records.back().kind = kind;
        records.back().line = line_no;
        current = &records.back();
    };

    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;

        if (line == "[rule]") {
            begin_record(PendingRecord::Kind::Pattern);
            continue;
        }
        if (line == "[simplify]") {
            begin_record(PendingRecord::Kind::Simplify);
            continue;
        }
        if (line == "[false_positive]") {
            begin_record(PendingRecord::Kind::FalsePositive);
            continue;
        }
        if (line.front() == '[') {
            throw ParseError(origin + ": unknown record type " + line, line_no);
        }

        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError(origin + ": expected 'key = value'", line_no);
        }
        if (!current) {
            throw ParseError(origin + ": field outside of a record", line_no);
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));

        if (key == "id") {
            current->id = value;
        } else if (key == "tag") {
            current->tag = parse_pattern_tag(value);
        } else if (key == "category") {
            current->category = parse_simplify_category(value);
        } else if (key == "min_tokens") {
            current->min_tokens = parse_uint(value, line_no, key);
        } else if (key == "max_utterance_index") {
            current->max_utterance_index = parse_uint(value, line_no, key);
        } else if (key == "expr") {
            if (value.empty()) throw ParseError(origin + ": empty expression", line_no);
            current->expressions.push_back(value);
        } else {
            throw ParseError(origin + ": unknown key '" + key + "'", line_no);
        }
    }

    RuleBundle bundle;
    std::set<std::string> seen_ids;
    for (const auto& record : records) {
        if (record.id.empty()) {
            throw ParseError(origin + ": record is missing an id", record.line);
        }
        if (!seen_ids.insert(record.id).second) {
            throw ParseError(origin + ": duplicate rule id '" + record.id + "'", record.line);
        }
        if (record.expressions.empty()) {
            throw ParseError(origin + ": rule '" + record.id + "' has no expressions",
                             record.line);
        }

        if (record.kind == PendingRecord::Kind::Simplify) {
            SimplifyRule rule;
            rule.id = record.id;
            if (!record.category) {
                throw ParseError(origin + ": simplify rule '" + record.id + "' needs a category",
                                 record.line);
            }
            rule.category = *record.category;
            rule.expressions = record.expressions;
            for (const auto& expr : rule.expressions) {
                rule.compiled.push_back(compile_expression(rule.id, expr));
            }
            bundle.simplification.rules.push_back(std::move(rule));
            continue;
        }

        Rule rule;
        rule.id = record.id;
        rule.min_tokens = record.min_tokens;
        rule.max_utterance_index = record.max_utterance_index;
        rule.expressions = record.expressions;
        for (const auto& expr : rule.expressions) {
            rule.compiled.push_back(compile_expression(rule.id, expr));
        }

        if (record.kind == PendingRecord::Kind::FalsePositive) {
            rule.tag = PatternTag::NegativeFilter;
            bundle.false_positive_rules.push_back(std::move(rule));
            continue;
        }

        if (!record.tag) {
            throw ParseError(origin + ": rule '" + record.id + "' needs a tag", record.line);
        }
        rule.tag = *record.tag;
        if (rule.tag == PatternTag::NegativeFilter) {
            bundle.patterns.negative_rules.push_back(std::move(rule));
        } else if (rule.tag == PatternTag::QuestionPrompt) {
            bundle.patterns.prompt_rules.push_back(std::move(rule));
        } else {
            bundle.patterns.positive_rules.push_back(std::move(rule));
        }
    }
    return bundle;
}

RuleBundle load_rules(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open rules file: " + path.string());
    }
    return parse_rules(in, path.filename().string());
}

}  // namespace poc
