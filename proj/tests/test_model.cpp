#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "poc/model.hpp"
#include "test_util.hpp"

using namespace poc;

namespace {

GatedModel random_model(std::uint32_t hidden, std::uint32_t hash_dim, std::uint64_t seed) {
    GatedModel model;
    model.hidden = hidden;
    model.hash_dim = hash_dim;
    model.resize();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(-0.5, 0.5);
    for (auto* block : {&model.w_text, &model.b_text, &model.w_tab, &model.w_gate, &model.b_gate,
                        &model.w_out, &model.b_out}) {
        for (auto& w : *block) w = d(rng);
    }
    return model;
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

double sigmoid_ref(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("zeroed tabular branch leaves the text vector unchanged") {
    GatedModel model = random_model(4, 1u << 8, 7);
    for (auto& w : model.w_tab) w = 0.0;
    std::vector<double> text = {0.1, -0.2, 0.3, 0.4};
    auto fused = gated_fuse(text, {0.5, 1.0}, model);
    REQUIRE(fused.size() == text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        CHECK(fused[i] == text[i]);
    }
}

TEST_CASE("a gate forced shut leaves the text vector unchanged") {
    GatedModel model = random_model(4, 1u << 8, 8);
    for (auto& b : model.b_gate) b = -1e9;  // sigmoid underflows to exactly 0
    std::vector<double> text = {0.7, 0.0, -0.4, 1.2};
    auto fused = gated_fuse(text, {0.9, 0.0}, model);
    for (std::size_t i = 0; i < text.size(); ++i) {
        CHECK(fused[i] == text[i]);
    }
}

TEST_CASE("gated fusion matches an independent evaluation of the closed form") {
    // dim-4 instance with fixed weights, evaluated by hand-written loops.
    GatedModel model;
    model.hidden = 4;
    model.hash_dim = 16;
    model.resize();
    const std::vector<double> w_tab = {0.1, 0.2, 0.3, -0.1, 0.0, 0.5, -0.2, 0.1};
    const std::vector<double> b_gate = {0.05, -0.1, 0.2, 0.0};
    model.w_tab = w_tab;
    model.b_gate = b_gate;
    for (std::size_t i = 0; i < model.w_gate.size(); ++i) {
        model.w_gate[i] = 0.01 * static_cast<double>(i % 7) - 0.02;
    }

    const std::vector<double> text = {0.1, -0.2, 0.3, 0.4};
    const std::array<double, 2> tab = {0.5, 1.0};

    auto fused = gated_fuse(text, tab, model);

    for (std::size_t i = 0; i < 4; ++i) {
        double u = w_tab[i * 2] * tab[0] + w_tab[i * 2 + 1] * tab[1];
        double s = b_gate[i];
        for (std::size_t j = 0; j < 4; ++j) s += model.w_gate[i * 6 + j] * text[j];
        s += model.w_gate[i * 6 + 4] * tab[0] + model.w_gate[i * 6 + 5] * tab[1];
        double expected = text[i] + sigmoid_ref(s) * u;
        CHECK(fused[i] == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("dimension mismatch raises a configuration error") {
    GatedModel model = random_model(4, 1u << 8, 9);
    std::vector<double> wrong = {1.0, 2.0, 3.0};
    CHECK_THROWS_AS(gated_fuse(wrong, {0.0, 0.0}, model), ConfigError);
}

TEST_CASE("analytic gradients match central finite differences on a dim-8 instance") {
    const FeaturizerConfig featurizer{1u << 10, 1, 3, true, 150};
    GatedModel model = random_model(8, featurizer.hash_dim, 13);
    auto x = featurize_text("my order keeps failing on the billing page since tuesday", featurizer);
    REQUIRE(!x.empty());
    const std::array<double, 2> tab = {0.3, 1.0};
    const int label = 0;

    auto grads = example_gradients(model, x, tab, label);
    const double h = 1e-6;

    auto check_block = [&](std::vector<double>& weights, const std::vector<double>& grad,
                           const char* name) {
        REQUIRE(weights.size() == grad.size());
        for (std::size_t i = 0; i < weights.size(); ++i) {
            const double saved = weights[i];
            weights[i] = saved + h;
            double up = model.example_loss(x, tab, label);
            weights[i] = saved - h;
            double down = model.example_loss(x, tab, label);
            weights[i] = saved;
            double fd = (up - down) / (2.0 * h);
            double denom = std::max(std::fabs(fd), std::fabs(grad[i]));
            if (denom > 1e-8) {
                double rel = std::fabs(fd - grad[i]) / denom;
                INFO(name << "[" << i << "] fd=" << fd << " analytic=" << grad[i]);
                CHECK(rel < 1e-4);
            } else {
                CHECK(std::fabs(fd - grad[i]) < 1e-8);
            }
        }
    };

    check_block(model.w_gate, grads.w_gate, "w_gate");
    check_block(model.b_gate, grads.b_gate, "b_gate");
    check_block(model.w_tab, grads.w_tab, "w_tab");
    check_block(model.w_out, grads.w_out, "w_out");
    check_block(model.b_out, grads.b_out, "b_out");
    check_block(model.b_text, grads.b_text, "b_text");
}

namespace {

std::vector<TrainingExample> synthetic_examples(std::size_t per_class, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> t(0.0, 1.0);
    const std::vector<std::string> purposes = {
        "i am calling because my invoice is wrong and i need it fixed",
        "the reason for my call is the delivery never arrived at my place",
        "hi i need a refund for my order from last week please",
        "i want to change the address on my account before friday",
    };
    const std::vector<std::string> questions = {
        "how can i help you today", "what can i do for you",
        "how may i assist you this morning", "what seems to be the problem today"};
    const std::vector<std::string> negatives = {
        "okay thank you so much bye", "let me pull up your account",
        "one moment please while i check", "yes that is correct thanks",
        "my account number is five five two one"};
    std::vector<TrainingExample> out;
    for (std::size_t i = 0; i < per_class; ++i) {
        TrainingExample p{purposes[i % purposes.size()], 0, {t(rng) * 0.3, 1.0}};
        TrainingExample q{questions[i % questions.size()], 1, {t(rng) * 0.2, 0.0}};
        TrainingExample n{negatives[i % negatives.size()], 2, {t(rng), t(rng) < 0.5 ? 0.0 : 1.0}};
        out.push_back(p);
        out.push_back(q);
        out.push_back(n);
    }
    return out;
}

}  // namespace

TEST_CASE("training requires all three labels") {
    std::vector<TrainingExample> only_negative = {
        {"okay thanks", 2, {0.1, 0.0}}, {"bye now", 2, {0.9, 1.0}}};
    TrainConfig config;
    config.featurizer.hash_dim = 1u << 10;
    CHECK_THROWS_AS(train(only_negative, config), TrainingError);
}

TEST_CASE("a runaway learning rate reports divergence with the step") {
    auto examples = synthetic_examples(6, 9);
    TrainConfig config;
    config.featurizer.hash_dim = 1u << 10;
    config.learning_rate = 1e14;  // blows the logits out of range
    config.epochs = 2;
    try {
        train(examples, config);
        FAIL("expected TrainingError");
    } catch (const TrainingError& e) {
        CHECK(std::string(e.what()).find("step") != std::string::npos);
    }
}

TEST_CASE("training is reproducible and the model file round-trips bit-exact") {
    auto examples = synthetic_examples(8, 21);
    TrainConfig config;
    config.featurizer.hash_dim = 1u << 12;
    config.hidden = 8;
    config.epochs = 3;
    config.seed = 77;

    TrainedScorer a = train(examples, config);
    TrainedScorer b = train(examples, config);
    CHECK(a == b);

    auto dir = std::filesystem::temp_directory_path();
    auto path_a = dir / "poc_model_a.bin";
    auto path_b = dir / "poc_model_b.bin";
    a.save(path_a);
    b.save(path_b);
    CHECK(slurp(path_a) == slurp(path_b));

    TrainedScorer loaded = TrainedScorer::load(path_a);
    CHECK(loaded == a);

    // Round-trip again: saving the loaded model reproduces the bytes.
    auto path_c = dir / "poc_model_c.bin";
    loaded.save(path_c);
    CHECK(slurp(path_c) == slurp(path_a));

    std::filesystem::remove(path_a);
    std::filesystem::remove(path_b);
    std::filesystem::remove(path_c);
}

TEST_CASE("a mismatched version fails loudly") {
    auto examples = synthetic_examples(4, 3);
    TrainConfig config;
    config.featurizer.hash_dim = 1u << 10;
    config.epochs = 1;
    TrainedScorer scorer = train(examples, config);
    auto path = std::filesystem::temp_directory_path() / "poc_model_version.bin";
    scorer.save(path);

    // Corrupt the version field (bytes 8..11).
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(8);
    std::uint32_t bad = 999;
    f.write(reinterpret_cast<const char*>(&bad), sizeof(bad));
    f.close();

    CHECK_THROWS_AS(TrainedScorer::load(path), ConfigError);
    std::filesystem::remove(path);
}

TEST_CASE("scores sum to one and truncation beyond 150 tokens changes nothing") {
    auto examples = synthetic_examples(6, 5);
    TrainConfig config;
    config.featurizer.hash_dim = 1u << 12;
    config.epochs = 2;
    TrainedScorer scorer = train(examples, config);

    std::string long_text, truncated;
    for (int i = 0; i < 200; ++i) {
        std::string word = "w" + std::to_string(i);
        long_text += word + " ";
        if (i < 150) truncated += word + " ";
    }
    TabularFeatures features{0.2, 1.0};
    ScoreTriple full = scorer.score_text(long_text, features);
    ScoreTriple cut = scorer.score_text(truncated, features);
    CHECK(full.on_simplex());
    CHECK(full.p_purpose == cut.p_purpose);
    CHECK(full.p_question == cut.p_question);
    CHECK(full.p_negative == cut.p_negative);
}

TEST_CASE("trained scorer beats the majority baseline on held-out data") {
    auto train_split = synthetic_examples(30, 11);
    auto held_out = synthetic_examples(10, 99);
    TrainConfig config;
    config.featurizer.hash_dim = 1u << 14;
    config.epochs = 4;
    TrainedScorer scorer = train(train_split, config);

    HeldOutMetrics metrics = evaluate_examples(scorer, held_out);
    CHECK(metrics.accuracy > majority_fraction(held_out));
    CHECK(metrics.macro_f1 > majority_macro_f1(held_out));
}

TEST_CASE("ablation harness reports four comparable rows") {
    auto train_split = synthetic_examples(20, 31);
    auto held_out = synthetic_examples(6, 77);
    TrainConfig config;
    config.featurizer.hash_dim = 1u << 12;
    config.epochs = 2;
    auto rows = ablation_harness(train_split, held_out, config);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].variant == "text only");
    CHECK(rows[3].variant == "all");
    for (const auto& row : rows) {
        CHECK(row.metrics.accuracy >= 0.0);
        CHECK(row.metrics.accuracy <= 1.0);
        CHECK(row.metrics.macro_f1 >= 0.0);
        CHECK(row.metrics.macro_f1 <= 1.0);
    }
}
