#include "poc/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <random>

#include "poc/tokenize.hpp"

namespace poc {

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string lowercased(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::array<double, kNumClasses> softmax(const std::array<double, kNumClasses>& z) {
    double m = std::max({z[0], z[1], z[2]});
    std::array<double, kNumClasses> e{};
    double sum = 0.0;
    for (std::size_t i = 0; i < kNumClasses; ++i) {
        e[i] = std::exp(z[i] - m);
        sum += e[i];
    }
    for (auto& v : e) v /= sum;
    return e;
}

std::array<double, kTabularDim> masked_tabular(const TabularFeatures& f, const TabularMask& m) {
    return {m.use_start_time ? f.start_time_norm : 0.0, m.use_side ? f.is_initiator_side : 0.0};
}

struct ForwardPass {
    std::vector<double> t;      // text vector
    std::vector<double> u;      // tabular projection
    std::vector<double> g;      // gate activations
    std::vector<double> fused;
    std::array<double, kNumClasses> logits;
    std::array<double, kNumClasses> probs;
};

ForwardPass forward(const GatedModel& model, const SparseVector& x,
                    const std::array<double, kTabularDim>& tab) {
    const std::size_t h = model.hidden;
    ForwardPass fp;
    fp.t = model.text_vector(x);

    fp.u.assign(h, 0.0);
    for (std::size_t i = 0; i < h; ++i) {
        fp.u[i] = model.w_tab[i * kTabularDim] * tab[0] + model.w_tab[i * kTabularDim + 1] * tab[1];
    }

    const std::size_t cat_dim = h + kTabularDim;
    fp.g.assign(h, 0.0);
    for (std::size_t i = 0; i < h; ++i) {
        double s = model.b_gate[i];
        const double* row = &model.w_gate[i * cat_dim];
        for (std::size_t j = 0; j < h; ++j) s += row[j] * fp.t[j];
        s += row[h] * tab[0] + row[h + 1] * tab[1];
        fp.g[i] = sigmoid(s);
    }

    fp.fused.assign(h, 0.0);
    for (std::size_t i = 0; i < h; ++i) fp.fused[i] = fp.t[i] + fp.g[i] * fp.u[i];

    for (std::size_t c = 0; c < kNumClasses; ++c) {
        double z = model.b_out[c];
        const double* row = &model.w_out[c * h];
        for (std::size_t j = 0; j < h; ++j) z += row[j] * fp.fused[j];
        fp.logits[c] = z;
    }
    fp.probs = softmax(fp.logits);
    return fp;
}

}  // namespace

void GatedModel::resize() {
    w_text.assign(static_cast<std::size_t>(hash_dim) * hidden, 0.0);
    b_text.assign(hidden, 0.0);
    w_tab.assign(static_cast<std::size_t>(hidden) * kTabularDim, 0.0);
    w_gate.assign(static_cast<std::size_t>(hidden) * (hidden + kTabularDim), 0.0);
    b_gate.assign(hidden, 0.0);
    w_out.assign(kNumClasses * static_cast<std::size_t>(hidden), 0.0);
    b_out.assign(kNumClasses, 0.0);
}

std::vector<double> GatedModel::text_vector(const SparseVector& x) const {
    std::vector<double> t(b_text);
    for (const auto& [feature, value] : x) {
        const double* col = &w_text[static_cast<std::size_t>(feature) * hidden];
        for (std::size_t i = 0; i < hidden; ++i) t[i] += col[i] * value;
    }
    return t;
}

std::array<double, kNumClasses> GatedModel::probabilities(
    const SparseVector& x, const std::array<double, kTabularDim>& tab) const {
    return forward(*this, x, tab).probs;
}

double GatedModel::example_loss(const SparseVector& x, const std::array<double, kTabularDim>& tab,
                                int label) const {
    auto probs = forward(*this, x, tab).probs;
    return -std::log(std::max(probs[static_cast<std::size_t>(label)], 1e-300));
}

std::vector<double> gated_fuse(const std::vector<double>& text_vector,
                               const std::array<double, kTabularDim>& tabular,
                               const GatedModel& model) {
    const std::size_t h = model.hidden;
    if (text_vector.size() != h) {
        throw ConfigError("gated_fuse: text vector dimension " +
                          std::to_string(text_vector.size()) + " does not match model hidden " +
                          std::to_string(h));
    }
    const std::size_t cat_dim = h + kTabularDim;
    if (model.w_tab.size() != h * kTabularDim || model.w_gate.size() != h * cat_dim ||
        model.b_gate.size() != h) {
        throw ConfigError("gated_fuse: fusion weight shapes are inconsistent");
    }
    std::vector<double> fused(h, 0.0);
    for (std::size_t i = 0; i < h; ++i) {
        double u = model.w_tab[i * kTabularDim] * tabular[0] +
                   model.w_tab[i * kTabularDim + 1] * tabular[1];
        double s = model.b_gate[i];
        const double* row = &model.w_gate[i * cat_dim];
        for (std::size_t j = 0; j < h; ++j) s += row[j] * text_vector[j];
        s += row[h] * tabular[0] + row[h + 1] * tabular[1];
        fused[i] = text_vector[i] + sigmoid(s) * u;
    }
    return fused;
}

GradientBlocks example_gradients(const GatedModel& model, const SparseVector& x,
                                 const std::array<double, kTabularDim>& tab, int label) {
    const std::size_t h = model.hidden;
    const std::size_t cat_dim = h + kTabularDim;
    ForwardPass fp = forward(model, x, tab);

    GradientBlocks grads;
    grads.b_text.assign(h, 0.0);
    grads.w_tab.assign(h * kTabularDim, 0.0);
    grads.w_gate.assign(h * cat_dim, 0.0);
    grads.b_gate.assign(h, 0.0);
    grads.w_out.assign(kNumClasses * h, 0.0);
    grads.b_out.assign(kNumClasses, 0.0);

    std::array<double, kNumClasses> dz = fp.probs;
    dz[static_cast<std::size_t>(label)] -= 1.0;

    std::vector<double> dfused(h, 0.0);
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        grads.b_out[c] = dz[c];
        for (std::size_t j = 0; j < h; ++j) {
            grads.w_out[c * h + j] = dz[c] * fp.fused[j];
            dfused[j] += dz[c] * model.w_out[c * h + j];
        }
    }

    // fused = t + g .* u
    std::vector<double> dt(dfused);           // direct path
    std::vector<double> du(h), ds(h);
    for (std::size_t i = 0; i < h; ++i) {
        du[i] = dfused[i] * fp.g[i];
        double dg = dfused[i] * fp.u[i];
        ds[i] = dg * fp.g[i] * (1.0 - fp.g[i]);
    }

    for (std::size_t i = 0; i < h; ++i) {
        grads.b_gate[i] = ds[i];
        double* grow = &grads.w_gate[i * cat_dim];
        const double* wrow = &model.w_gate[i * cat_dim];
        for (std::size_t j = 0; j < h; ++j) {
            grow[j] = ds[i] * fp.t[j];
            dt[j] += ds[i] * wrow[j];
        }
        grow[h] = ds[i] * tab[0];
        grow[h + 1] = ds[i] * tab[1];

        grads.w_tab[i * kTabularDim] = du[i] * tab[0];
        grads.w_tab[i * kTabularDim + 1] = du[i] * tab[1];
    }

    grads.b_text = dt;
    grads.w_text.reserve(x.size());
    for (const auto& [feature, value] : x) {
        std::vector<double> col(h);
        for (std::size_t i = 0; i < h; ++i) col[i] = dt[i] * value;
        grads.w_text.emplace_back(feature, std::move(col));
    }
    return grads;
}

SparseVector featurize_text(const std::string& text, const FeaturizerConfig& config) {
    auto words = word_tokens(text, config.max_tokens);
    if (config.lowercase) {
        for (auto& w : words) w = lowercased(w);
    }
    std::map<std::uint32_t, double> counts;
    const std::uint32_t mask = config.hash_dim - 1;  // hash_dim is a power of two
    for (std::uint32_t n = config.ngram_min; n <= config.ngram_max; ++n) {
        if (words.size() < n) break;
        for (std::size_t i = 0; i + n <= words.size(); ++i) {
            std::string gram;
            for (std::size_t j = 0; j < n; ++j) {
                if (j) gram.push_back('\x1f');
                gram += words[i + j];
            }
            counts[static_cast<std::uint32_t>(fnv1a(gram)) & mask] += 1.0;
        }
    }
    return SparseVector(counts.begin(), counts.end());
}

ScoreTriple TrainedScorer::score_text(const std::string& text,
                                      const TabularFeatures& features) const {
    auto x = featurize_text(text, featurizer_);
    auto probs = model_.probabilities(x, masked_tabular(features, mask_));
    return ScoreTriple{probs[0], probs[1], probs[2]};
}

ScoreTriple TrainedScorer::score(const Utterance& utterance, const MatchContext& context,
                                 const TabularFeatures& features) const {
    (void)context;  // the trained path is context-free; selection adds history
    return score_text(utterance.text, features);
}

TrainedScorer train(const std::vector<TrainingExample>& examples, const TrainConfig& config) {
    std::array<std::size_t, kNumClasses> label_counts{};
    for (const auto& ex : examples) {
        if (ex.label < 0 || ex.label >= static_cast<int>(kNumClasses)) {
            throw TrainingError("label out of range: " + std::to_string(ex.label));
        }
        ++label_counts[static_cast<std::size_t>(ex.label)];
    }
    static const char* kLabelNames[] = {"purpose", "question", "negative"};
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        if (label_counts[c] == 0) {
            throw TrainingError(std::string("training data has no '") + kLabelNames[c] +
                                "' examples");
        }
    }
    if ((config.featurizer.hash_dim & (config.featurizer.hash_dim - 1)) != 0) {
        throw ConfigError("featurizer hash_dim must be a power of two");
    }

    GatedModel model;
    model.hidden = config.hidden;
    model.hash_dim = config.featurizer.hash_dim;
    model.resize();

    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> init(-0.05, 0.05);
    for (auto& w : model.w_tab) w = init(rng);
    for (auto& w : model.w_gate) w = init(rng);
    for (auto& w : model.w_out) w = init(rng);

    // Featurize once up front; the epochs only reshuffle.
    std::vector<SparseVector> features;
    std::vector<std::array<double, kTabularDim>> tabs;
    features.reserve(examples.size());
    tabs.reserve(examples.size());
    for (const auto& ex : examples) {
        features.push_back(featurize_text(ex.text, config.featurizer));
        tabs.push_back(masked_tabular(ex.tabular, config.mask));
    }

    std::vector<std::size_t> order(examples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    const double lr = config.learning_rate;
    const double wd = config.weight_decay;
    double epoch_loss = 0.0;
    std::uint64_t step = 0;

    for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        epoch_loss = 0.0;
        for (std::size_t idx : order) {
            ++step;
            const auto& x = features[idx];
            const auto& tab = tabs[idx];
            const int label = examples[idx].label;

            auto grads = example_gradients(model, x, tab, label);

            for (const auto& [feature, col] : grads.w_text) {
                double* w = &model.w_text[static_cast<std::size_t>(feature) * model.hidden];
                for (std::size_t i = 0; i < model.hidden; ++i) w[i] -= lr * col[i];
            }
            for (std::size_t i = 0; i < model.b_text.size(); ++i)
                model.b_text[i] -= lr * grads.b_text[i];
            for (std::size_t i = 0; i < model.w_tab.size(); ++i)
                model.w_tab[i] -= lr * (grads.w_tab[i] + wd * model.w_tab[i]);
            for (std::size_t i = 0; i < model.w_gate.size(); ++i)
                model.w_gate[i] -= lr * (grads.w_gate[i] + wd * model.w_gate[i]);
            for (std::size_t i = 0; i < model.b_gate.size(); ++i)
                model.b_gate[i] -= lr * grads.b_gate[i];
            for (std::size_t i = 0; i < model.w_out.size(); ++i)
                model.w_out[i] -= lr * (grads.w_out[i] + wd * model.w_out[i]);
            for (std::size_t i = 0; i < model.b_out.size(); ++i)
                model.b_out[i] -= lr * grads.b_out[i];

            double loss = model.example_loss(x, tab, label);
            if (!std::isfinite(loss)) {
                throw TrainingError("training diverged at step " + std::to_string(step) +
                                    " (non-finite loss)");
            }
            epoch_loss += loss;
        }
    }

    TrainMeta meta;
    meta.epochs = config.epochs;
    meta.learning_rate = config.learning_rate;
    meta.weight_decay = config.weight_decay;
    meta.seed = config.seed;
    meta.final_train_loss = examples.empty() ? 0.0 : epoch_loss / examples.size();

    return TrainedScorer(config.featurizer, config.mask, std::move(model), meta);
}

HeldOutMetrics evaluate_examples(const TrainedScorer& scorer,
                                 const std::vector<TrainingExample>& examples) {
    std::array<std::array<std::size_t, kNumClasses>, kNumClasses> confusion{};  // [gold][pred]
    std::size_t correct = 0;
    for (const auto& ex : examples) {
        ScoreTriple triple = scorer.score_text(ex.text, ex.tabular);
        std::array<double, kNumClasses> p{triple.p_purpose, triple.p_question, triple.p_negative};
        std::size_t pred = static_cast<std::size_t>(
            std::max_element(p.begin(), p.end()) - p.begin());
        auto gold = static_cast<std::size_t>(ex.label);
        ++confusion[gold][pred];
        if (pred == gold) ++correct;
    }
    HeldOutMetrics metrics;
    if (examples.empty()) return metrics;
    metrics.accuracy = static_cast<double>(correct) / examples.size();

    double f1_sum = 0.0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        std::size_t tp = confusion[c][c];
        std::size_t fp = 0, fn = 0;
        for (std::size_t o = 0; o < kNumClasses; ++o) {
            if (o == c) continue;
            fp += confusion[o][c];
            fn += confusion[c][o];
        }
        double denom = 2.0 * tp + fp + fn;
        f1_sum += denom > 0.0 ? 2.0 * tp / denom : 0.0;
    }
    metrics.macro_f1 = f1_sum / kNumClasses;
    return metrics;
}

double majority_fraction(const std::vector<TrainingExample>& examples) {
    std::array<std::size_t, kNumClasses> counts{};
    for (const auto& ex : examples) ++counts[static_cast<std::size_t>(ex.label)];
    std::size_t max_count = *std::max_element(counts.begin(), counts.end());
    return examples.empty() ? 0.0 : static_cast<double>(max_count) / examples.size();
}

double majority_macro_f1(const std::vector<TrainingExample>& examples) {
    if (examples.empty()) return 0.0;
    std::array<std::size_t, kNumClasses> counts{};
    for (const auto& ex : examples) ++counts[static_cast<std::size_t>(ex.label)];
    std::size_t majority = static_cast<std::size_t>(
        std::max_element(counts.begin(), counts.end()) - counts.begin());
    // Predicting the majority class everywhere: recall 1 for it, 0 elsewhere.
    double p = static_cast<double>(counts[majority]) / examples.size();
    double f1_majority = 2.0 * p / (p + 1.0);
    return f1_majority / kNumClasses;
}

std::vector<AblationRow> ablation_harness(const std::vector<TrainingExample>& train_split,
                                          const std::vector<TrainingExample>& held_out,
                                          TrainConfig base) {
    const std::array<std::pair<std::string, TabularMask>, 4> variants{{
        {"text only", {false, false}},
        {"text + start time", {true, false}},
        {"text + call side", {false, true}},
        {"all", {true, true}},
    }};
    std::vector<AblationRow> rows;
    for (const auto& [name, mask] : variants) {
        TrainConfig config = base;
        config.mask = mask;
        TrainedScorer scorer = train(train_split, config);
        rows.push_back({name, evaluate_examples(scorer, held_out)});
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Model file: magic + version header, featurizer config, weights as raw
// little-endian doubles. Round-trips bit-exact.
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'P', 'O', 'C', 'S', 'C', 'O', 'R', 'E'};
constexpr std::uint32_t kFormatVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
void read_pod(std::istream& in, T& value) {
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
}

void write_block(std::ostream& out, const std::vector<double>& block) {
    std::uint64_t n = block.size();
    write_pod(out, n);
    out.write(reinterpret_cast<const char*>(block.data()),
              static_cast<std::streamsize>(n * sizeof(double)));
}

void read_block(std::istream& in, std::vector<double>& block, std::uint64_t expected) {
    std::uint64_t n = 0;
    read_pod(in, n);
    if (n != expected) {
        throw ConfigError("model file block size mismatch (corrupt file?)");
    }
    block.resize(n);
    in.read(reinterpret_cast<char*>(block.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
}

}  // namespace

void TrainedScorer::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write model file: " + path.string());

    out.write(kMagic, sizeof(kMagic));
    write_pod(out, kFormatVersion);
    write_pod(out, featurizer_.hash_dim);
    write_pod(out, featurizer_.ngram_min);
    write_pod(out, featurizer_.ngram_max);
    write_pod(out, static_cast<std::uint8_t>(featurizer_.lowercase));
    write_pod(out, featurizer_.max_tokens);
    write_pod(out, static_cast<std::uint8_t>(mask_.use_start_time));
    write_pod(out, static_cast<std::uint8_t>(mask_.use_side));
    write_pod(out, model_.hidden);
    write_pod(out, model_.hash_dim);
    write_pod(out, meta_.epochs);
    write_pod(out, meta_.learning_rate);
    write_pod(out, meta_.weight_decay);
    write_pod(out, meta_.seed);
    write_pod(out, meta_.final_train_loss);

    write_block(out, model_.w_text);
    write_block(out, model_.b_text);
    write_block(out, model_.w_tab);
    write_block(out, model_.w_gate);
    write_block(out, model_.b_gate);
    write_block(out, model_.w_out);
    write_block(out, model_.b_out);
    if (!out) throw ConfigError("failed writing model file: " + path.string());
}

TrainedScorer TrainedScorer::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open model file: " + path.string());

    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw ConfigError("not a scorer model file: " + path.string());
    }
    std::uint32_t version = 0;
    read_pod(in, version);
    if (version != kFormatVersion) {
        throw ConfigError("model file version " + std::to_string(version) +
                          " is not supported (expected " + std::to_string(kFormatVersion) + ")");
    }

    FeaturizerConfig featurizer;
    TabularMask mask;
    GatedModel model;
    TrainMeta meta;
    std::uint8_t flag = 0;

    read_pod(in, featurizer.hash_dim);
    read_pod(in, featurizer.ngram_min);
    read_pod(in, featurizer.ngram_max);
    read_pod(in, flag);
    featurizer.lowercase = flag != 0;
    read_pod(in, featurizer.max_tokens);
    read_pod(in, flag);
    mask.use_start_time = flag != 0;
    read_pod(in, flag);
    mask.use_side = flag != 0;
    read_pod(in, model.hidden);
    read_pod(in, model.hash_dim);
    read_pod(in, meta.epochs);
    read_pod(in, meta.learning_rate);
    read_pod(in, meta.weight_decay);
    read_pod(in, meta.seed);
    read_pod(in, meta.final_train_loss);

    const std::uint64_t h = model.hidden;
    read_block(in, model.w_text, static_cast<std::uint64_t>(model.hash_dim) * h);
    read_block(in, model.b_text, h);
    read_block(in, model.w_tab, h * kTabularDim);
    read_block(in, model.w_gate, h * (h + kTabularDim));
    read_block(in, model.b_gate, h);
    read_block(in, model.w_out, kNumClasses * h);
    read_block(in, model.b_out, kNumClasses);
    if (!in) throw ConfigError("model file is truncated: " + path.string());

    return TrainedScorer(featurizer, mask, std::move(model), meta);
}

}  // namespace poc
