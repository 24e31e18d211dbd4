#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "poc/rules.hpp"
#include "poc/scoring.hpp"
#include "poc/selection.hpp"
#include "poc/simplify.hpp"
#include "poc/types.hpp"

namespace poc {

struct DetectorConfig {
    GateConfig gate;
    ThresholdTable thresholds;
};

struct DetectionResult {
    std::string call_id;
    std::optional<PurposeDecision> decision;
    std::vector<PurposeDecision> updates;  // every emission, in order
};

// Wires the full per-utterance pipeline: gate -> score -> combine ->
// consider -> simplify. The detector itself is stateless; all per-call state
// lives in the CallSession, so one detector serves any number of concurrent
// sessions. Feeding a call utterance-by-utterance and re-running the batch
// path over the completed transcript produce the same final decision.
class Detector {
public:
    Detector(std::shared_ptr<const PatternEngine> engine, std::shared_ptr<const Scorer> scorer,
             std::shared_ptr<const Simplifier> simplifier, DetectorConfig config = {});

    std::unique_ptr<CallSession> open_session(const std::string& call_id,
                                              CallDirection direction = CallDirection::Unknown) const;

    // Streaming step. Returns the new best decision when this utterance
    // displaced the previous one.
    std::optional<PurposeDecision> process(CallSession& session, const Utterance& utterance) const;

    // Closes the session and returns the final decision, if any.
    std::optional<PurposeDecision> finish(CallSession& session) const;

    // Batch counterpart: replays the call through a fresh session.
    DetectionResult run_call(const Call& call) const;

    const PatternEngine& engine() const noexcept { return *engine_; }
    const DetectorConfig& config() const noexcept { return config_; }

private:
    std::shared_ptr<const PatternEngine> engine_;
    std::shared_ptr<const Scorer> scorer_;
    std::shared_ptr<const Simplifier> simplifier_;
    DetectorConfig config_;
};

}  // namespace poc
