#include "poc/selection.hpp"

#include <algorithm>
#include <array>

namespace poc {

void GateConfig::validate() const {
    if (min_tokens > max_tokens) {
        throw ConfigError("gate min_tokens exceeds max_tokens");
    }
    if (max_start_time_s <= 0.0 || max_utterance_index == 0 || min_tokens == 0) {
        throw ConfigError("gate bounds must be positive");
    }
}

bool gate(const Utterance& utterance, const GateConfig& config) {
    return utterance.start_time_s <= config.max_start_time_s &&
           utterance.index < config.max_utterance_index &&
           utterance.token_count >= config.min_tokens &&
           utterance.token_count <= config.max_tokens;
}

double ThresholdTable::threshold_for(std::optional<PatternTag> dominant) const {
    if (dominant && *dominant == PatternTag::CallPurposePhrase) return signpost;
    return fallback;
}

std::optional<PatternTag> ThresholdTable::dominant_tag(const std::set<PatternTag>& tags) {
    static constexpr std::array<PatternTag, 7> kPriority = {
        PatternTag::CallPurposePhrase, PatternTag::Update,       PatternTag::ProblemPhrase,
        PatternTag::DesirePhrase,      PatternTag::Continuation, PatternTag::QuestionResponse,
        PatternTag::Greeting,
    };
    for (PatternTag tag : kPriority) {
        if (tags.count(tag)) return tag;
    }
    return std::nullopt;
}

void ThresholdTable::validate() const {
    if (signpost < fallback) {
        throw ConfigError("signpost threshold must be at least the fallback threshold");
    }
}

CallSession::CallSession(std::string call_id, ThresholdTable thresholds, SimplifyFn simplify,
                         CallDirection direction)
    : call_id_(std::move(call_id)),
      thresholds_(thresholds),
      simplify_(std::move(simplify)),
      direction_(direction) {
    thresholds_.validate();
}

void CallSession::ensure_open() const {
    if (closed_) {
        throw StateError("session for call '" + call_id_ + "' is closed");
    }
}

void CallSession::record(const Utterance& utterance, double question_score,
                         const ContextFlags& flags) {
    if (last_index_ && utterance.index <= *last_index_) {
        throw StateError("utterance index " + std::to_string(utterance.index) +
                         " is not increasing for call '" + call_id_ + "'");
    }
    last_index_ = utterance.index;
    ++utterances_seen_;
    auto& history = history_for(utterance.side);
    history.push_front({utterance.index, question_score, flags});
    while (history.size() > 2) history.pop_back();
}

void CallSession::skip(const Utterance& utterance, const ContextFlags& flags) {
    ensure_open();
    record(utterance, 0.0, flags);
}

double CallSession::combined_score(const ScoreTriple& triple, CallSide side) const {
    const auto& other = history_for(opposite(side));
    double boost = 0.0;
    for (std::size_t i = 0; i < other.size() && i < 2; ++i) {
        boost = std::max(boost, other[i].question_score);
    }
    return triple.p_purpose + boost;
}

std::optional<PurposeDecision> CallSession::consider(const Utterance& utterance,
                                                     const ScoreTriple& triple,
                                                     const std::set<PatternTag>& tags,
                                                     const ContextFlags& flags) {
    ensure_open();
    triple.validate();

    const double combined = combined_score(triple, utterance.side);
    record(utterance, triple.p_question, flags);

    const double threshold = thresholds_.threshold_for(ThresholdTable::dominant_tag(tags));
    if (combined < threshold) return std::nullopt;
    if (best_ && combined <= best_->combined_score) return std::nullopt;  // earliest wins ties

    PurposeDecision decision;
    decision.call_id = call_id_;
    decision.utterance_index = utterance.index;
    decision.combined_score = combined;
    decision.tags = tags;
    decision.original_text = utterance.text;
    decision.simplified_text = simplify_ ? simplify_(utterance.text) : utterance.text;
    decision.decided_at_utterance_index = utterance.index;
    best_ = decision;
    return decision;
}

std::optional<PurposeDecision> CallSession::close() {
    if (closed_) {
        throw StateError("session for call '" + call_id_ + "' is already closed");
    }
    closed_ = true;
    return best_;
}

MatchContext CallSession::context() const {
    MatchContext ctx;
    for (const auto& entry : agent_history_) {
        ctx.recent_agent.push_back({entry.index, CallSide::Agent, entry.flags.prompt_matched,
                                    entry.flags.purpose_phrase_matched});
    }
    for (const auto& entry : customer_history_) {
        ctx.recent_customer.push_back({entry.index, CallSide::Customer,
                                       entry.flags.prompt_matched,
                                       entry.flags.purpose_phrase_matched});
    }
    return ctx;
}

}  // namespace poc
