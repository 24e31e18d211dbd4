#include "poc/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <random>

#include <json.hpp>

namespace poc {

using nlohmann::json;

const char* to_string(RowLabel label) {
    switch (label) {
        case RowLabel::Positive: return "positive";
        case RowLabel::Question: return "question";
        case RowLabel::Negative: return "negative";
    }
    return "negative";
}

RowLabel parse_row_label(const std::string& text) {
    if (text == "positive") return RowLabel::Positive;
    if (text == "question") return RowLabel::Question;
    if (text == "negative") return RowLabel::Negative;
    throw ValidationError("unknown row label: '" + text + "'");
}

std::vector<LabeledUtterance> weak_label(const std::vector<Call>& corpus,
                                         const Detector& detector) {
    if (corpus.empty()) {
        throw ValidationError("weak_label needs a non-empty corpus");
    }
    std::vector<LabeledUtterance> rows;
    const GateConfig& gate_config = detector.config().gate;

    for (const Call& call : corpus) {
        DetectionResult result = detector.run_call(call);
        const bool hit = result.decision.has_value();

        for (const Utterance& utterance : call.utterances) {
            if (!gate(utterance, gate_config)) continue;

            LabeledUtterance row;
            row.utterance = utterance;
            row.from_hit_call = hit;
            row.direction = call.direction;

            if (hit && utterance.index == result.decision->utterance_index) {
                row.label = RowLabel::Positive;
                row.source_pattern = ThresholdTable::dominant_tag(result.decision->tags);
            } else if (detector.engine().matches_prompt(utterance)) {
                row.label = RowLabel::Question;
            } else {
                row.label = RowLabel::Negative;
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::vector<LabeledUtterance> filter_false_positives(std::vector<LabeledUtterance> rows,
                                                     const std::vector<Rule>& patterns) {
    auto matches_any = [&](const std::string& text) {
        for (const Rule& rule : patterns) {
            for (const std::regex& re : rule.compiled) {
                if (std::regex_search(text, re)) return true;
            }
        }
        return false;
    };
    rows.erase(std::remove_if(rows.begin(), rows.end(),
                              [&](const LabeledUtterance& row) {
                                  return row.label == RowLabel::Positive &&
                                         matches_any(row.utterance.text);
                              }),
               rows.end());
    return rows;
}

void SamplingSpec::validate() const {
    auto close_to_one = [](double x) { return std::fabs(x - 1.0) <= 1e-9; };
    if (!close_to_one(positive_share + negative_share + question_share)) {
        throw ValidationError("label mix must sum to 1");
    }
    if (!close_to_one(call_purpose_share + desire_share + problem_share + other_share)) {
        throw ValidationError("pattern mix must sum to 1");
    }
    if (!close_to_one(train_share + dev_share + validation_share)) {
        throw ValidationError("split mix must sum to 1");
    }
    if (size == 0) throw ValidationError("sample size must be positive");
}

std::vector<LabeledUtterance> Dataset::split(const std::string& name) const {
    std::vector<LabeledUtterance> out;
    for (const auto& row : rows) {
        if (row.split == name) out.push_back(row);
    }
    return out;
}

namespace {

enum class PositiveStratum { CallPurpose, Desire, Problem, Other };

PositiveStratum stratum_of(const LabeledUtterance& row) {
    if (!row.source_pattern) return PositiveStratum::Other;
    switch (*row.source_pattern) {
        case PatternTag::CallPurposePhrase: return PositiveStratum::CallPurpose;
        case PatternTag::DesirePhrase: return PositiveStratum::Desire;
        case PatternTag::ProblemPhrase: return PositiveStratum::Problem;
        default: return PositiveStratum::Other;
    }
}

std::vector<const LabeledUtterance*> take_stratum(std::vector<const LabeledUtterance*>& pool,
                                                  std::size_t want, const char* name,
                                                  std::mt19937_64& rng) {
    if (pool.size() < want) {
        throw ValidationError(std::string("not enough rows in stratum '") + name + "': need " +
                              std::to_string(want) + ", have " + std::to_string(pool.size()));
    }
    std::shuffle(pool.begin(), pool.end(), rng);
    return {pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(want)};
}

}  // namespace

Dataset resample(const std::vector<LabeledUtterance>& rows, const SamplingSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);

    // Deterministic regardless of input order.
    std::vector<const LabeledUtterance*> eligible;
    for (const auto& row : rows) {
        if (row.from_hit_call) eligible.push_back(&row);
    }
    std::sort(eligible.begin(), eligible.end(),
              [](const LabeledUtterance* a, const LabeledUtterance* b) {
                  if (a->utterance.call_id != b->utterance.call_id) {
                      return a->utterance.call_id < b->utterance.call_id;
                  }
                  return a->utterance.index < b->utterance.index;
              });

    std::vector<const LabeledUtterance*> questions, negatives;
    std::map<PositiveStratum, std::vector<const LabeledUtterance*>> positives;
    for (const auto* row : eligible) {
        switch (row->label) {
            case RowLabel::Positive: positives[stratum_of(*row)].push_back(row); break;
            case RowLabel::Question: questions.push_back(row); break;
            case RowLabel::Negative: negatives.push_back(row); break;
        }
    }

    const auto n = spec.size;
    const auto n_positive = static_cast<std::size_t>(std::llround(n * spec.positive_share));
    const auto n_negative = static_cast<std::size_t>(std::llround(n * spec.negative_share));
    const auto n_question = n - n_positive - n_negative;

    const auto n_cp = static_cast<std::size_t>(std::llround(n_positive * spec.call_purpose_share));
    const auto n_desire = static_cast<std::size_t>(std::llround(n_positive * spec.desire_share));
    const auto n_problem = static_cast<std::size_t>(std::llround(n_positive * spec.problem_share));
    const auto n_other = n_positive - n_cp - n_desire - n_problem;

    std::vector<const LabeledUtterance*> selected;
    selected.reserve(n);
    for (const auto* row :
         take_stratum(positives[PositiveStratum::CallPurpose], n_cp, "positive/call_purpose", rng))
        selected.push_back(row);
    for (const auto* row :
         take_stratum(positives[PositiveStratum::Desire], n_desire, "positive/desire", rng))
        selected.push_back(row);
    for (const auto* row :
         take_stratum(positives[PositiveStratum::Problem], n_problem, "positive/problem", rng))
        selected.push_back(row);
    for (const auto* row :
         take_stratum(positives[PositiveStratum::Other], n_other, "positive/other", rng))
        selected.push_back(row);
    for (const auto* row : take_stratum(questions, n_question, "question", rng))
        selected.push_back(row);
    for (const auto* row : take_stratum(negatives, n_negative, "negative", rng))
        selected.push_back(row);

    // Call-disjoint splits: assign whole calls greedily until each split
    // reaches its row quota.
    std::map<std::string, std::vector<const LabeledUtterance*>> by_call;
    for (const auto* row : selected) by_call[row->utterance.call_id].push_back(row);
    std::vector<std::string> call_ids;
    call_ids.reserve(by_call.size());
    for (const auto& [call_id, group] : by_call) {
        (void)group;
        call_ids.push_back(call_id);
    }
    std::shuffle(call_ids.begin(), call_ids.end(), rng);

    const double train_quota = spec.train_share * static_cast<double>(n);
    const double dev_quota = (spec.train_share + spec.dev_share) * static_cast<double>(n);

    Dataset dataset;
    dataset.rows.reserve(n);
    std::size_t assigned = 0;
    std::map<std::string, std::vector<LabeledUtterance>> splits;
    for (const auto& call_id : call_ids) {
        const char* split = assigned < train_quota  ? "train"
                            : assigned < dev_quota ? "dev"
                                                    : "validation";
        for (const auto* row : by_call[call_id]) {
            LabeledUtterance out = *row;
            out.split = split;
            splits[split].push_back(std::move(out));
            ++assigned;
        }
    }

    for (const char* name : {"train", "dev", "validation"}) {
        auto& group = splits[name];
        std::sort(group.begin(), group.end(), [](const LabeledUtterance& a,
                                                 const LabeledUtterance& b) {
            if (a.utterance.call_id != b.utterance.call_id) {
                return a.utterance.call_id < b.utterance.call_id;
            }
            return a.utterance.index < b.utterance.index;
        });
        for (auto& row : group) dataset.rows.push_back(std::move(row));
    }
    return dataset;
}

void write_dataset(std::ostream& out, const Dataset& dataset) {
    for (const auto& row : dataset.rows) {
        json record{{"text", row.utterance.text},
                    {"label", to_string(row.label)},
                    {"call_id", row.utterance.call_id},
                    {"index", row.utterance.index},
                    {"start_time_s", row.utterance.start_time_s},
                    {"side", to_string(row.utterance.side)},
                    {"direction", to_string(row.direction)},
                    {"split", row.split}};
        if (row.source_pattern) {
            record["tag"] = to_string(*row.source_pattern);
        } else {
            record["tag"] = nullptr;
        }
        out << record.dump() << '\n';
    }
}

Dataset read_dataset(std::istream& in) {
    Dataset dataset;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(std::string("malformed dataset record: ") + e.what(), line_no);
        }
        try {
            LabeledUtterance row;
            row.utterance = make_utterance(record.at("call_id").get<std::string>(),
                                           record.at("index").get<std::uint32_t>(),
                                           parse_call_side(record.value("side", "customer")),
                                           record.value("start_time_s", 0.0),
                                           record.at("text").get<std::string>());
            row.label = parse_row_label(record.at("label").get<std::string>());
            if (record.contains("tag") && record["tag"].is_string()) {
                row.source_pattern = parse_pattern_tag(record["tag"].get<std::string>());
            }
            row.direction = parse_call_direction(record.value("direction", "unknown"));
            row.split = record.value("split", "train");
            row.from_hit_call = true;
            dataset.rows.push_back(std::move(row));
        } catch (const json::exception& e) {
            throw ParseError(std::string("bad dataset record: ") + e.what(), line_no);
        }
    }
    return dataset;
}

TrainingExample to_training_example(const LabeledUtterance& row) {
    TrainingExample example;
    example.text = row.utterance.text;
    example.label = row.label == RowLabel::Positive ? 0 : row.label == RowLabel::Question ? 1 : 2;
    example.tabular = TabularFeatures::make(row.utterance, row.direction);
    return example;
}

std::vector<TrainingExample> to_training_examples(const std::vector<LabeledUtterance>& rows) {
    std::vector<TrainingExample> out;
    out.reserve(rows.size());
    for (const auto& row : rows) out.push_back(to_training_example(row));
    return out;
}

}  // namespace poc
