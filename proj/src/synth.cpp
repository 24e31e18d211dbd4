#include "poc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "poc/tokenize.hpp"

namespace poc {

using nlohmann::json;

void GenSpec::validate() const {
    if (n_calls == 0) throw ValidationError("n_calls must be positive");
    const double domain_sum = support_rate + sales_rate + general_rate;
    if (std::fabs(domain_sum - 1.0) > 1e-9) {
        throw ValidationError("domain mix must sum to 1");
    }
    if (inbound_rate < 0.0 || inbound_rate > 1.0 || no_purpose_rate < 0.0 ||
        no_purpose_rate > 1.0) {
        throw ValidationError("rates must lie in [0,1]");
    }
    if (purpose_tokens_min < 1 || purpose_tokens_min > purpose_tokens_max) {
        throw ValidationError("purpose token bounds are inconsistent");
    }
    const double mix = mix_call_purpose + mix_desire + mix_question_response + mix_greeting +
                       mix_problem + mix_update + mix_continuation;
    if (mix <= 0.0) throw ValidationError("pattern mix must have positive mass");
}

TemplateLibrary TemplateLibrary::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open template file: " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ParseError("template file " + path.string() + ": " + e.what());
    }

    TemplateLibrary lib;
    auto read_map = [](const json& node) {
        std::map<std::string, std::vector<std::string>> out;
        for (auto it = node.begin(); it != node.end(); ++it) {
            out[it.key()] = it.value().get<std::vector<std::string>>();
        }
        return out;
    };
    lib.entities_ = read_map(doc.at("entities"));
    lib.purpose_ = read_map(doc.at("purpose"));
    lib.filler_ = read_map(doc.at("filler"));
    lib.padding_ = doc.at("padding").get<std::vector<std::string>>();
    lib.dysfluencies_ = doc.at("dysfluencies").get<std::vector<std::string>>();
    return lib;
}

const std::vector<std::string>& TemplateLibrary::purpose_family(const std::string& family) const {
    auto it = purpose_.find(family);
    if (it == purpose_.end() || it->second.empty()) {
        throw ConfigError("template library has no purpose family '" + family + "'");
    }
    return it->second;
}

const std::vector<std::string>& TemplateLibrary::filler(const std::string& group) const {
    auto it = filler_.find(group);
    if (it == filler_.end() || it->second.empty()) {
        throw ConfigError("template library has no filler group '" + group + "'");
    }
    return it->second;
}

std::string TemplateLibrary::fill_slots(const std::string& text, std::mt19937_64& rng) const {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] != '{') {
            out.push_back(text[i++]);
            continue;
        }
        auto close = text.find('}', i);
        if (close == std::string::npos) {
            out.append(text.substr(i));
            break;
        }
        std::string key = text.substr(i + 1, close - i - 1);
        auto it = entities_.find(key);
        if (it == entities_.end() || it->second.empty()) {
            throw ConfigError("template slot '{" + key + "}' has no entity list");
        }
        std::uniform_int_distribution<std::size_t> pick(0, it->second.size() - 1);
        out += it->second[pick(rng)];
        i = close + 1;
    }
    return out;
}

namespace {

struct CallPlan {
    CallDomain domain;
    CallDirection direction;
    bool has_purpose;
    PatternTag pattern;
    bool recipient_voiced;
    double purpose_time;
    std::uint32_t purpose_tokens;
};

const std::string& pick(const std::vector<std::string>& options, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> d(0, options.size() - 1);
    return options[d(rng)];
}

double clamped_normal(std::mt19937_64& rng, double mean, double sd, double lo, double hi) {
    std::normal_distribution<double> d(mean, sd);
    return std::clamp(d(rng), lo, hi);
}

const char* purpose_family_name(PatternTag tag) {
    switch (tag) {
        case PatternTag::CallPurposePhrase: return "call_purpose_phrase";
        case PatternTag::DesirePhrase: return "desire_phrase";
        case PatternTag::QuestionResponse: return "question_response";
        case PatternTag::Greeting: return "greeting";
        case PatternTag::ProblemPhrase: return "problem_phrase";
        case PatternTag::Update: return "update";
        case PatternTag::Continuation: return "continuation";
        default: return "call_purpose_phrase";
    }
}

}  // namespace

Corpus generate(const GenSpec& spec, const TemplateLibrary& templates) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const std::array<std::pair<PatternTag, double>, 7> pattern_mix{{
        {PatternTag::CallPurposePhrase, spec.mix_call_purpose},
        {PatternTag::DesirePhrase, spec.mix_desire},
        {PatternTag::QuestionResponse, spec.mix_question_response},
        {PatternTag::Greeting, spec.mix_greeting},
        {PatternTag::ProblemPhrase, spec.mix_problem},
        {PatternTag::Update, spec.mix_update},
        {PatternTag::Continuation, spec.mix_continuation},
    }};
    double mix_total = 0.0;
    for (const auto& [tag, w] : pattern_mix) mix_total += w;

    auto sample_pattern = [&]() {
        double r = unit(rng) * mix_total;
        for (const auto& [tag, w] : pattern_mix) {
            if (r < w) return tag;
            r -= w;
        }
        return PatternTag::CallPurposePhrase;
    };

    Corpus corpus;
    corpus.calls.reserve(spec.n_calls);

    for (std::size_t ordinal = 0; ordinal < spec.n_calls; ++ordinal) {
        CallPlan plan;
        double dr = unit(rng);
        plan.domain = dr < spec.support_rate                    ? CallDomain::Support
                      : dr < spec.support_rate + spec.sales_rate ? CallDomain::Sales
                                                                 : CallDomain::General;
        plan.direction =
            unit(rng) < spec.inbound_rate ? CallDirection::Inbound : CallDirection::Outbound;
        plan.has_purpose = unit(rng) >= spec.no_purpose_rate;
        plan.pattern = sample_pattern();
        plan.recipient_voiced = plan.pattern == PatternTag::CallPurposePhrase &&
                                unit(rng) < spec.recipient_purpose_rate;
        plan.purpose_time = clamped_normal(rng, spec.purpose_time_mean_s, spec.purpose_time_sd_s,
                                           spec.purpose_time_min_s, spec.purpose_time_max_s);
        double tokens = clamped_normal(rng, spec.purpose_tokens_mean, spec.purpose_tokens_sd,
                                       spec.purpose_tokens_min, spec.purpose_tokens_max);
        plan.purpose_tokens = static_cast<std::uint32_t>(std::lround(tokens));

        char id_buf[32];
        std::snprintf(id_buf, sizeof(id_buf), "synth-%06zu", ordinal);
        Call call;
        call.call_id = id_buf;
        call.direction = plan.direction;
        call.domain = plan.domain;

        const CallSide initiator = call.initiator_side();
        const CallSide recipient = opposite(initiator);

        std::uint32_t index = 0;
        double clock = 0.0;
        auto add = [&](CallSide side, std::string text, double at) {
            clock = std::max(clock, at);
            call.utterances.push_back(
                make_utterance(call.call_id, index++, side, clock, std::move(text)));
        };

        GoldAnnotation gold;
        gold.call_id = call.call_id;

        if (!plan.has_purpose) {
            // Context known to both parties: generic work chatter, no purpose.
            add(CallSide::Agent,
                templates.fill_slots(pick(templates.filler("agent_opening"), rng), rng), 0.0);
            int chatter = 3 + static_cast<int>(unit(rng) * 4.0);
            CallSide side = CallSide::Customer;
            for (int i = 0; i < chatter; ++i) {
                add(side, templates.fill_slots(pick(templates.filler("no_purpose_topic"), rng), rng),
                    clock + 4.0 + unit(rng) * 6.0);
                side = opposite(side);
            }
            add(CallSide::Agent, templates.fill_slots(pick(templates.filler("closing_agent"), rng), rng),
                clock + 4.0 + unit(rng) * 6.0);
            add(CallSide::Customer,
                templates.fill_slots(pick(templates.filler("closing_customer"), rng), rng),
                clock + 3.0);
        } else {
            const CallSide purpose_side = plan.pattern == PatternTag::QuestionResponse
                                              ? initiator
                                          : plan.recipient_voiced ? recipient
                                                                  : initiator;

            // Openings. The last pre-purpose slot may carry the prompt that a
            // question-response purpose answers.
            std::vector<std::pair<CallSide, std::string>> preamble;
            if (plan.direction == CallDirection::Inbound) {
                preamble.emplace_back(
                    CallSide::Agent,
                    templates.fill_slots(pick(templates.filler("agent_opening"), rng), rng));
            } else {
                preamble.emplace_back(
                    CallSide::Customer,
                    templates.fill_slots(pick(templates.filler("customer_opening"), rng), rng));
                preamble.emplace_back(
                    CallSide::Agent,
                    templates.fill_slots(pick(templates.filler("agent_intro_outbound"), rng), rng));
            }

            bool wants_prompt = plan.pattern == PatternTag::QuestionResponse ||
                                (!plan.recipient_voiced && unit(rng) < 0.4);
            if (wants_prompt) {
                if (opposite(purpose_side) == CallSide::Agent) {
                    preamble.emplace_back(
                        CallSide::Agent,
                        templates.fill_slots(pick(templates.filler("prompt_agent"), rng), rng));
                } else {
                    preamble.emplace_back(
                        CallSide::Customer,
                        templates.fill_slots(pick(templates.filler("prompt_customer"), rng), rng));
                }
            }

            // Respect per-pattern index ceilings: greetings sit in the first
            // six utterances, problem statements in the first ten.
            std::size_t max_preamble = 29;
            if (plan.pattern == PatternTag::Greeting) max_preamble = 5;
            if (plan.pattern == PatternTag::ProblemPhrase) max_preamble = 9;
            while (preamble.size() > max_preamble) preamble.erase(preamble.begin());

            const double step = plan.purpose_time / static_cast<double>(preamble.size() + 1);
            for (std::size_t i = 0; i < preamble.size(); ++i) {
                add(preamble[i].first, preamble[i].second,
                    step * static_cast<double>(i) + unit(rng) * step * 0.5);
            }

            // The planted purpose utterance.
            std::string family = purpose_family_name(plan.pattern);
            if (plan.recipient_voiced) family = "call_purpose_phrase_recipient";
            std::string text =
                templates.fill_slots(pick(templates.purpose_family(family), rng), rng);
            if (plan.pattern != PatternTag::Greeting && unit(rng) < spec.dysfluency_rate) {
                text = pick(templates.dysfluencies(), rng) + text;
            }
            std::uint32_t target = plan.purpose_tokens;
            if (plan.pattern == PatternTag::Greeting) target = std::max(target, 34u);
            std::string padded = text;
            while (count_word_tokens(padded) < target) {
                std::string pad = pick(templates.padding(), rng);
                if (padded.size() > 1 && padded.back() == '.') {
                    padded.insert(padded.size() - 1, " " + pad);
                } else {
                    padded += " " + pad;
                }
            }
            gold.purpose_index = index;
            gold.pattern = plan.pattern;
            add(purpose_side, padded, plan.purpose_time);

            // Wrap-up chatter and closings.
            int wrap = 2 + static_cast<int>(unit(rng) * 4.0);
            CallSide side = opposite(purpose_side);
            for (int i = 0; i < wrap; ++i) {
                const char* group = side == CallSide::Agent ? "work_agent" : "work_customer";
                add(side, templates.fill_slots(pick(templates.filler(group), rng), rng),
                    clock + 4.0 + unit(rng) * 8.0);
                side = opposite(side);
            }
            add(CallSide::Agent,
                templates.fill_slots(pick(templates.filler("closing_agent"), rng), rng),
                clock + 4.0 + unit(rng) * 6.0);
            add(CallSide::Customer,
                templates.fill_slots(pick(templates.filler("closing_customer"), rng), rng),
                clock + 3.0);
        }

        call.duration_s = std::max(clock + 4.0 + unit(rng) * 15.0, 35.0);
        corpus.gold[call.call_id] = gold;
        corpus.calls.push_back(std::move(call));
    }
    return corpus;
}

ScoreTriple OracleScorer::score(const Utterance& utterance, const MatchContext& context,
                                const TabularFeatures& features) const {
    (void)context;
    (void)features;
    auto it = gold_.find(utterance.call_id);
    if (it != gold_.end() && it->second && *it->second == utterance.index) {
        return ScoreTriple{0.95, 0.03, 0.02};
    }
    return ScoreTriple{0.02, 0.03, 0.95};
}

}  // namespace poc
