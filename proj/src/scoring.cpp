#include "poc/scoring.hpp"

namespace poc {

ScoreTriple RuleScorer::score(const Utterance& utterance, const MatchContext& context,
                              const TabularFeatures& features) const {
    (void)features;  // the rule path uses length/order/history/patterns only
    if (engine_->is_negative_filtered(utterance)) return table_.negative;
    if (!engine_->rule_classify(utterance, context).empty()) return table_.purpose;
    if (engine_->matches_prompt(utterance)) return table_.question;
    return table_.negative;
}

}  // namespace poc
