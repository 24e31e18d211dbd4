#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "poc/scoring.hpp"
#include "poc/transcript.hpp"
#include "poc/types.hpp"

namespace poc {

// Synthetic-corpus parameters. Defaults follow the published distributions of
// real contact-center traffic: inbound share, purpose placement and length,
// the language-pattern mix, and the share of calls with no explicit purpose.
struct GenSpec {
    std::size_t n_calls = 1000;

    double support_rate = 0.40;
    double sales_rate = 0.30;
    double general_rate = 0.30;

    double inbound_rate = 0.592;

    double purpose_time_mean_s = 29.9;
    double purpose_time_sd_s = 19.1;
    double purpose_time_min_s = 0.0;    // clamped
    double purpose_time_max_s = 180.0;  // clamped

    double purpose_tokens_mean = 45.5;
    double purpose_tokens_sd = 29.9;
    std::uint32_t purpose_tokens_min = 4;    // clamped
    std::uint32_t purpose_tokens_max = 224;  // clamped

    // Language-pattern mix (relative weights, normalized at use).
    double mix_call_purpose = 32.7;
    double mix_desire = 31.7;
    double mix_question_response = 15.8;
    double mix_greeting = 9.1;
    double mix_problem = 4.4;
    double mix_update = 5.8;
    double mix_continuation = 0.4;

    double no_purpose_rate = 0.07;
    double dysfluency_rate = 0.15;
    double recipient_purpose_rate = 0.08;  // recipient voices the purpose as an inquiry

    std::uint64_t seed = 1;

    void validate() const;
};

// Template families for each pattern, authored as data so the corpus can
// diversify without code changes. Slots written as {key} draw uniformly from
// the entity lists.
class TemplateLibrary {
public:
    static TemplateLibrary load(const std::filesystem::path& path);

    const std::vector<std::string>& purpose_family(const std::string& family) const;
    const std::vector<std::string>& filler(const std::string& group) const;
    const std::vector<std::string>& padding() const noexcept { return padding_; }
    const std::vector<std::string>& dysfluencies() const noexcept { return dysfluencies_; }

    std::string fill_slots(const std::string& text, std::mt19937_64& rng) const;

private:
    std::map<std::string, std::vector<std::string>> entities_;
    std::map<std::string, std::vector<std::string>> purpose_;
    std::map<std::string, std::vector<std::string>> filler_;
    std::vector<std::string> padding_;
    std::vector<std::string> dysfluencies_;
};

// Builds a gold-annotated corpus: filler utterances around at most one
// planted purpose realized from the sampled pattern's template family.
// Question-response purposes are always preceded by an opposite-side prompt;
// deterministic under the seed.
Corpus generate(const GenSpec& spec, const TemplateLibrary& templates);

// Reads the planted gold annotations instead of the text: the gold purpose
// utterance scores as a near-certain purpose, everything else as negative.
// Diagnostic scorer for generator-soundness checks.
class OracleScorer : public Scorer {
public:
    explicit OracleScorer(const Corpus& corpus) {
        for (const auto& [call_id, gold] : corpus.gold) {
            gold_[call_id] = gold.purpose_index;
        }
    }

    ScoreTriple score(const Utterance& utterance, const MatchContext& context,
                      const TabularFeatures& features) const override;

private:
    std::map<std::string, std::optional<std::uint32_t>> gold_;
};

}  // namespace poc
