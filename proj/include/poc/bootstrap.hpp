#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "poc/detector.hpp"
#include "poc/model.hpp"
#include "poc/transcript.hpp"
#include "poc/types.hpp"

namespace poc {

enum class RowLabel : std::uint8_t { Positive, Question, Negative };

const char* to_string(RowLabel label);
RowLabel parse_row_label(const std::string& text);

// One weakly-labeled training row. Positive rows are the final rule-pipeline
// decision of their call (at most one per call); question rows carry a prompt
// match; everything else that passed the candidate gate is negative.
struct LabeledUtterance {
    Utterance utterance;
    RowLabel label = RowLabel::Negative;
    std::optional<PatternTag> source_pattern;  // dominant tag, positives only
    bool from_hit_call = false;
    CallDirection direction = CallDirection::Unknown;
    std::string split;  // set by resample: train / dev / validation
};

// Runs the rule pipeline over raw transcripts and labels every gated
// utterance. Rows from calls with no purpose hit are retained but flagged.
std::vector<LabeledUtterance> weak_label(const std::vector<Call>& corpus,
                                         const Detector& detector);

// Drops positives matching the authored false-positive patterns
// (signpost-only statements with no entity content). Other rows pass through.
std::vector<LabeledUtterance> filter_false_positives(std::vector<LabeledUtterance> rows,
                                                     const std::vector<Rule>& patterns);

struct SamplingSpec {
    std::size_t size = 10000;

    double positive_share = 0.425;
    double negative_share = 0.425;
    double question_share = 0.15;

    // Pattern mix within the positive class. "Other" pools the remaining
    // purpose patterns (updates, continuations, greetings, responses).
    double call_purpose_share = 0.30;
    double desire_share = 0.30;
    double problem_share = 0.20;
    double other_share = 0.20;

    double train_share = 0.8;
    double dev_share = 0.1;
    double validation_share = 0.1;

    std::uint64_t seed = 1;

    void validate() const;  // each mix must sum to 1
};

struct Dataset {
    std::vector<LabeledUtterance> rows;  // ordered: train, dev, validation

    std::vector<LabeledUtterance> split(const std::string& name) const;
};

// Stratified resample to the target label and pattern mixes, with
// call-disjoint train/dev/validation splits. Only rows from hit calls are
// eligible. Deterministic under the seed; errors name the deficient stratum.
Dataset resample(const std::vector<LabeledUtterance>& rows, const SamplingSpec& spec);

// Newline-delimited dataset records: text, label, tag, call_id, index,
// start_time_s, side, direction, split.
void write_dataset(std::ostream& out, const Dataset& dataset);
Dataset read_dataset(std::istream& in);

// Bridge into the trainable scorer.
TrainingExample to_training_example(const LabeledUtterance& row);
std::vector<TrainingExample> to_training_examples(const std::vector<LabeledUtterance>& rows);

}  // namespace poc
