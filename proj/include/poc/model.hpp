#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "poc/scoring.hpp"
#include "poc/types.hpp"

namespace poc {

// ---------------------------------------------------------------------------
// Text featurizer: bag of hashed 1-3 grams over at most 150 word tokens.
// The configuration is frozen into the model file so scoring is reproducible.
// ---------------------------------------------------------------------------

struct FeaturizerConfig {
    std::uint32_t hash_dim = 1u << 18;
    std::uint32_t ngram_min = 1;
    std::uint32_t ngram_max = 3;
    bool lowercase = true;
    std::uint32_t max_tokens = 150;  // truncation cap, in word tokens

    bool operator==(const FeaturizerConfig&) const = default;
};

using SparseVector = std::vector<std::pair<std::uint32_t, double>>;  // sorted by index

SparseVector featurize_text(const std::string& text, const FeaturizerConfig& config);

// Which tabular features feed the fusion; both on in the full model, masked
// selectively for the ablation harness.
struct TabularMask {
    bool use_start_time = true;
    bool use_side = true;

    bool operator==(const TabularMask&) const = default;
};

// ---------------------------------------------------------------------------
// Gated fusion model. The text branch projects hashed n-gram counts to a
// hidden vector t; the tabular branch is mixed in through a learned gate:
//
//   u     = W_t * tab
//   g     = sigmoid(W_g * [t ; tab] + b_g)
//   fused = t + g .* u
//   p     = softmax(W_c * fused + b_c)
//
// Classes are indexed 0 = purpose, 1 = question, 2 = negative.
// ---------------------------------------------------------------------------

constexpr std::size_t kNumClasses = 3;
constexpr std::size_t kTabularDim = 2;

struct GatedModel {
    std::uint32_t hidden = 8;
    std::uint32_t hash_dim = 1u << 18;

    std::vector<double> w_text;  // hash_dim x hidden, column-contiguous per feature
    std::vector<double> b_text;  // hidden
    std::vector<double> w_tab;   // hidden x 2
    std::vector<double> w_gate;  // hidden x (hidden + 2)
    std::vector<double> b_gate;  // hidden
    std::vector<double> w_out;   // 3 x hidden
    std::vector<double> b_out;   // 3

    void resize();  // allocates all blocks to match hidden/hash_dim

    std::vector<double> text_vector(const SparseVector& x) const;
    std::array<double, kNumClasses> probabilities(const SparseVector& x,
                                                  const std::array<double, kTabularDim>& tab) const;
    double example_loss(const SparseVector& x, const std::array<double, kTabularDim>& tab,
                        int label) const;

    bool operator==(const GatedModel& other) const = default;
};

// The fusion step on its own, usable against any text vector of matching
// dimension. Throws ConfigError on a dimension mismatch.
std::vector<double> gated_fuse(const std::vector<double>& text_vector,
                               const std::array<double, kTabularDim>& tabular,
                               const GatedModel& model);

// Dense gradient blocks for one example; mirrors the weight layout except the
// text block, which is returned sparsely as (feature, d/dw per hidden unit).
struct GradientBlocks {
    std::vector<std::pair<std::uint32_t, std::vector<double>>> w_text;
    std::vector<double> b_text;
    std::vector<double> w_tab;
    std::vector<double> w_gate;
    std::vector<double> b_gate;
    std::vector<double> w_out;
    std::vector<double> b_out;
};

GradientBlocks example_gradients(const GatedModel& model, const SparseVector& x,
                                 const std::array<double, kTabularDim>& tab, int label);

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainingExample {
    std::string text;
    int label = 2;  // 0 purpose, 1 question, 2 negative
    TabularFeatures tabular;
};

struct TrainConfig {
    std::uint32_t epochs = 4;
    double learning_rate = 0.15;
    double weight_decay = 1e-4;
    std::uint64_t seed = 1;
    std::uint32_t hidden = 8;
    FeaturizerConfig featurizer;
    TabularMask mask;
};

struct TrainMeta {
    std::uint32_t epochs = 0;
    double learning_rate = 0.0;
    double weight_decay = 0.0;
    std::uint64_t seed = 0;
    double final_train_loss = 0.0;

    bool operator==(const TrainMeta& other) const = default;
};

// Deployment-phase scorer: the trained gated-fusion classifier behind the
// same contract as the rule scorer. Model files round-trip bit-exact.
class TrainedScorer : public Scorer {
public:
    TrainedScorer() = default;
    TrainedScorer(FeaturizerConfig featurizer, TabularMask mask, GatedModel model, TrainMeta meta)
        : featurizer_(featurizer), mask_(mask), model_(std::move(model)), meta_(meta) {}

    ScoreTriple score(const Utterance& utterance, const MatchContext& context,
                      const TabularFeatures& features) const override;
    ScoreTriple score_text(const std::string& text, const TabularFeatures& features) const;

    void save(const std::filesystem::path& path) const;
    static TrainedScorer load(const std::filesystem::path& path);

    const FeaturizerConfig& featurizer() const noexcept { return featurizer_; }
    const TabularMask& mask() const noexcept { return mask_; }
    const GatedModel& model() const noexcept { return model_; }
    const TrainMeta& meta() const noexcept { return meta_; }

    bool operator==(const TrainedScorer& other) const {
        return featurizer_ == other.featurizer_ && mask_ == other.mask_ &&
               model_ == other.model_ && meta_ == other.meta_;
    }

private:
    FeaturizerConfig featurizer_;
    TabularMask mask_;
    GatedModel model_;
    TrainMeta meta_;
};

// Single-threaded SGD on multiclass cross-entropy over the fused
// representation. Requires all three labels in the dataset; reproducible
// given the seed; reports the step on divergence.
TrainedScorer train(const std::vector<TrainingExample>& examples, const TrainConfig& config);

struct HeldOutMetrics {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
};

HeldOutMetrics evaluate_examples(const TrainedScorer& scorer,
                                 const std::vector<TrainingExample>& examples);

// Majority-class baselines computed from label counts.
double majority_fraction(const std::vector<TrainingExample>& examples);
double majority_macro_f1(const std::vector<TrainingExample>& examples);

// Feature-ablation harness: trains text-only, text+start-time, text+side and
// all-features variants on the same data and reports one comparable row each.
struct AblationRow {
    std::string variant;
    HeldOutMetrics metrics;
};

std::vector<AblationRow> ablation_harness(const std::vector<TrainingExample>& train_split,
                                          const std::vector<TrainingExample>& held_out,
                                          TrainConfig base);

}  // namespace poc
