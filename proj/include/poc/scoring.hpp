#pragma once

#include <algorithm>
#include <memory>

#include "poc/rules.hpp"
#include "poc/types.hpp"

namespace poc {

// Tabular side-channel features fused with the text representation.
struct TabularFeatures {
    static constexpr double kStartTimeCapS = 180.0;

    double start_time_norm = 0.0;   // start time normalized by the 180 s cap
    double is_initiator_side = 0.0; // 1 when the utterance side placed the call

    static TabularFeatures make(const Utterance& utterance, CallDirection direction) {
        TabularFeatures f;
        f.start_time_norm =
            std::clamp(utterance.start_time_s, 0.0, kStartTimeCapS) / kStartTimeCapS;
        CallSide initiator =
            direction == CallDirection::Outbound ? CallSide::Agent : CallSide::Customer;
        f.is_initiator_side = utterance.side == initiator ? 1.0 : 0.0;
        return f;
    }
};

// The scoring contract: one utterance in, probabilities over
// {purpose, question, negative} out. Implementations are pure functions of
// their inputs and frozen parameters, so one instance can serve any number of
// concurrent sessions.
class Scorer {
public:
    virtual ~Scorer() = default;
    virtual ScoreTriple score(const Utterance& utterance, const MatchContext& context,
                              const TabularFeatures& features) const = 0;
};

// Fixed triples the rule scorer assigns per pattern outcome. The values are
// configuration, chosen so the admission thresholds have headroom.
struct RuleScoreTable {
    ScoreTriple purpose{0.90, 0.02, 0.08};
    ScoreTriple question{0.05, 0.90, 0.05};
    ScoreTriple negative{0.05, 0.05, 0.90};
};

// The knowledge-engineered model recast as a scorer: qualifying purpose tags
// map to a high purpose score, prompts to a high question score, everything
// else (including negative-vetoed utterances) to a high negative score.
class RuleScorer : public Scorer {
public:
    explicit RuleScorer(std::shared_ptr<const PatternEngine> engine, RuleScoreTable table = {})
        : engine_(std::move(engine)), table_(table) {}

    ScoreTriple score(const Utterance& utterance, const MatchContext& context,
                      const TabularFeatures& features) const override;

    const RuleScoreTable& table() const noexcept { return table_; }

private:
    std::shared_ptr<const PatternEngine> engine_;
    RuleScoreTable table_;
};

}  // namespace poc
