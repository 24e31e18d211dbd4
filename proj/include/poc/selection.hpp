#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <set>
#include <string>

#include "poc/rules.hpp"
#include "poc/types.hpp"

namespace poc {

// Candidate gate: an utterance is considered at all only when it starts
// within 180 seconds and the first 30 utterances of the call and is between
// 4 and 150 word tokens long.
struct GateConfig {
    double max_start_time_s = 180.0;
    std::uint32_t max_utterance_index = 30;  // exclusive, 0-based
    std::uint32_t min_tokens = 4;
    std::uint32_t max_tokens = 150;

    void validate() const;
};

bool gate(const Utterance& utterance, const GateConfig& config);

// Admission thresholds on the combined score, per linguistic type. Signposted
// utterances (call-purpose phrases) score high under the rule scorer and need
// a higher bar than the rest.
struct ThresholdTable {
    double signpost = 0.85;  // CallPurposePhrase
    double fallback = 0.60;  // all other tags and untagged candidates

    double threshold_for(std::optional<PatternTag> dominant) const;

    // Highest-priority tag present, the one whose threshold applies.
    static std::optional<PatternTag> dominant_tag(const std::set<PatternTag>& tags);

    void validate() const;  // signpost must not undercut the fallback
};

using SimplifyFn = std::function<std::string(const std::string&)>;

// Streaming per-call state: utterance counter, the last two score triples per
// side, and the best decision so far. One session per call_id; events within
// a session are processed strictly in arrival order. Sessions share only
// immutable rule/scorer state, so distinct sessions may run in parallel.
class CallSession {
public:
    CallSession(std::string call_id, ThresholdTable thresholds = {},
                SimplifyFn simplify = nullptr, CallDirection direction = CallDirection::Unknown);

    const std::string& call_id() const noexcept { return call_id_; }
    std::uint32_t utterances_seen() const noexcept { return utterances_seen_; }
    bool is_closed() const noexcept { return closed_; }
    CallDirection direction() const noexcept { return direction_; }
    void set_direction(CallDirection direction) { direction_ = direction; }
    const std::optional<PurposeDecision>& best() const noexcept { return best_; }

    // Records an utterance that did not pass the gate (and so was never
    // scored). It still occupies a history slot with a zero question score.
    void skip(const Utterance& utterance, const ContextFlags& flags);

    // Cross-side question boost: the candidate's purpose score plus the
    // maximum question score of the two most recent preceding utterances
    // from the other call side (missing history contributes zero). Pure;
    // reads the history as it stands before this utterance is recorded.
    double combined_score(const ScoreTriple& triple, CallSide side) const;

    // Full admission step for a gated candidate: combine, compare against the
    // per-tag threshold and the best so far (strict, so ties keep the earlier
    // utterance), update history, and emit the new decision if it won.
    std::optional<PurposeDecision> consider(const Utterance& utterance, const ScoreTriple& triple,
                                            const std::set<PatternTag>& tags,
                                            const ContextFlags& flags);

    // Marks the session closed and returns the final decision, if any.
    // Closing twice or feeding a closed session is a state error.
    std::optional<PurposeDecision> close();

    // Context view for the pattern engine: up to the two most recent
    // preceding utterances per side with their match flags.
    MatchContext context() const;

private:
    struct HistoryEntry {
        std::uint32_t index;
        double question_score;
        ContextFlags flags;
    };

    void ensure_open() const;
    void record(const Utterance& utterance, double question_score, const ContextFlags& flags);
    std::deque<HistoryEntry>& history_for(CallSide side) {
        return side == CallSide::Agent ? agent_history_ : customer_history_;
    }
    const std::deque<HistoryEntry>& history_for(CallSide side) const {
        return side == CallSide::Agent ? agent_history_ : customer_history_;
    }

    std::string call_id_;
    ThresholdTable thresholds_;
    SimplifyFn simplify_;
    CallDirection direction_;
    std::uint32_t utterances_seen_ = 0;
    std::optional<std::uint32_t> last_index_;
    std::deque<HistoryEntry> agent_history_;     // front = most recent
    std::deque<HistoryEntry> customer_history_;  // front = most recent
    std::optional<PurposeDecision> best_;
    bool closed_ = false;
};

}  // namespace poc
