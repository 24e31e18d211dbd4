#include "poc/types.hpp"

#include <cmath>

#include "poc/tokenize.hpp"

namespace poc {

CallSide opposite(CallSide side) {
    return side == CallSide::Agent ? CallSide::Customer : CallSide::Agent;
}

const char* to_string(CallSide side) {
    return side == CallSide::Agent ? "agent" : "customer";
}

const char* to_string(CallDirection direction) {
    switch (direction) {
        case CallDirection::Inbound: return "inbound";
        case CallDirection::Outbound: return "outbound";
        default: return "unknown";
    }
}

const char* to_string(CallDomain domain) {
    switch (domain) {
        case CallDomain::Support: return "support";
        case CallDomain::Sales: return "sales";
        case CallDomain::General: return "general";
        default: return "unknown";
    }
}

CallSide parse_call_side(const std::string& text) {
    if (text == "agent") return CallSide::Agent;
    if (text == "customer") return CallSide::Customer;
    throw ValidationError("unknown call side: '" + text + "'");
}

CallDirection parse_call_direction(const std::string& text) {
    if (text == "inbound") return CallDirection::Inbound;
    if (text == "outbound") return CallDirection::Outbound;
    if (text == "unknown") return CallDirection::Unknown;
    throw ValidationError("unknown call direction: '" + text + "'");
}

CallDomain parse_call_domain(const std::string& text) {
    if (text == "support") return CallDomain::Support;
    if (text == "sales") return CallDomain::Sales;
    if (text == "general") return CallDomain::General;
    if (text == "unknown") return CallDomain::Unknown;
    throw ValidationError("unknown call domain: '" + text + "'");
}

Utterance make_utterance(std::string call_id, std::uint32_t index, CallSide side,
                         double start_time_s, std::string text) {
    Utterance u;
    u.call_id = std::move(call_id);
    u.index = index;
    u.side = side;
    u.start_time_s = start_time_s;
    u.token_count = static_cast<std::uint32_t>(count_word_tokens(text));
    u.text = std::move(text);
    return u;
}

const char* to_string(PatternTag tag) {
    switch (tag) {
        case PatternTag::CallPurposePhrase: return "call_purpose_phrase";
        case PatternTag::DesirePhrase: return "desire_phrase";
        case PatternTag::QuestionResponse: return "question_response";
        case PatternTag::Greeting: return "greeting";
        case PatternTag::ProblemPhrase: return "problem_phrase";
        case PatternTag::Update: return "update";
        case PatternTag::Continuation: return "continuation";
        case PatternTag::QuestionPrompt: return "question_prompt";
        case PatternTag::NegativeFilter: return "negative_filter";
    }
    return "unknown";
}

PatternTag parse_pattern_tag(const std::string& text) {
    if (text == "call_purpose_phrase") return PatternTag::CallPurposePhrase;
    if (text == "desire_phrase") return PatternTag::DesirePhrase;
    if (text == "question_response") return PatternTag::QuestionResponse;
    if (text == "greeting") return PatternTag::Greeting;
    if (text == "problem_phrase") return PatternTag::ProblemPhrase;
    if (text == "update") return PatternTag::Update;
    if (text == "continuation") return PatternTag::Continuation;
    if (text == "question_prompt") return PatternTag::QuestionPrompt;
    if (text == "negative_filter") return PatternTag::NegativeFilter;
    throw ValidationError("unknown pattern tag: '" + text + "'");
}

bool ScoreTriple::on_simplex() const noexcept {
    if (p_purpose < 0.0 || p_purpose > 1.0) return false;
    if (p_question < 0.0 || p_question > 1.0) return false;
    if (p_negative < 0.0 || p_negative > 1.0) return false;
    return std::fabs(p_purpose + p_question + p_negative - 1.0) <= kSimplexTolerance;
}

void ScoreTriple::validate() const {
    if (!on_simplex()) {
        throw ValidationError("score triple is not on the probability simplex");
    }
}

}  // namespace poc
