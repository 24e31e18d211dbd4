#include "poc/detector.hpp"

namespace poc {

Detector::Detector(std::shared_ptr<const PatternEngine> engine,
                   std::shared_ptr<const Scorer> scorer,
                   std::shared_ptr<const Simplifier> simplifier, DetectorConfig config)
    : engine_(std::move(engine)),
      scorer_(std::move(scorer)),
      simplifier_(std::move(simplifier)),
      config_(config) {
    config_.gate.validate();
    config_.thresholds.validate();
}

std::unique_ptr<CallSession> Detector::open_session(const std::string& call_id,
                                                    CallDirection direction) const {
    SimplifyFn simplify;
    if (simplifier_) {
        auto simplifier = simplifier_;
        simplify = [simplifier](const std::string& text) {
            return simplifier->simplify(text).text;
        };
    }
    return std::make_unique<CallSession>(call_id, config_.thresholds, std::move(simplify),
                                         direction);
}

std::optional<PurposeDecision> Detector::process(CallSession& session,
                                                 const Utterance& utterance) const {
    // Context flags are computed for every utterance, gated or not, so later
    // utterances see their prompt/signpost history.
    ContextFlags flags = engine_->context_flags(utterance);

    if (!gate(utterance, config_.gate)) {
        session.skip(utterance, flags);
        return std::nullopt;
    }

    MatchContext context = session.context();
    std::set<PatternTag> tags = engine_->rule_classify(utterance, context);
    TabularFeatures features = TabularFeatures::make(utterance, session.direction());
    ScoreTriple triple = scorer_->score(utterance, context, features);
    return session.consider(utterance, triple, tags, flags);
}

std::optional<PurposeDecision> Detector::finish(CallSession& session) const {
    return session.close();
}

DetectionResult Detector::run_call(const Call& call) const {
    DetectionResult result;
    result.call_id = call.call_id;
    auto session = open_session(call.call_id, call.direction);
    for (const auto& utterance : call.utterances) {
        if (auto update = process(*session, utterance)) {
            result.updates.push_back(*update);
        }
    }
    result.decision = finish(*session);
    return result;
}

}  // namespace poc
