#include <doctest.h>

#include "poc/scoring.hpp"
#include "test_util.hpp"

using namespace poc;
using poc::test::utt;

TEST_CASE("rule scorer maps pattern outcomes to the declared triples") {
    auto engine = poc::test::default_engine();
    RuleScorer scorer(engine);
    TabularFeatures features;

    SUBCASE("qualifying purpose text") {
        auto u = utt("c", 1, CallSide::Customer, 10.0,
                     "The reason for my call is I moved to a new address, so I need to change it "
                     "on my profile.");
        ScoreTriple t = scorer.score(u, {}, features);
        CHECK(t.p_purpose == doctest::Approx(0.90));
        CHECK(t.p_question == doctest::Approx(0.02));
        CHECK(t.p_negative == doctest::Approx(0.08));
    }
    SUBCASE("agent prompt scores as a question") {
        auto u = utt("c", 0, CallSide::Agent, 0.0, "How can I help you?");
        ScoreTriple t = scorer.score(u, {}, features);
        CHECK(t.p_question > t.p_purpose);
        CHECK(t.p_question > t.p_negative);
    }
    SUBCASE("unmatched utterance scores as negative") {
        auto u = utt("c", 3, CallSide::Agent, 30.0, "Okay let me check that.");
        ScoreTriple t = scorer.score(u, {}, features);
        CHECK(t.p_negative > t.p_purpose);
        CHECK(t.p_negative > t.p_question);
    }
    SUBCASE("vetoed utterance scores as negative even if a pattern matched") {
        auto u = utt("c", 8, CallSide::Customer, 90.0,
                     "Thank you so much, have a great day, bye bye.");
        ScoreTriple t = scorer.score(u, {}, features);
        CHECK(t.p_negative > t.p_purpose);
    }
}

TEST_CASE("rule scorer output always sits on the simplex") {
    auto engine = poc::test::default_engine();
    RuleScorer scorer(engine);
    TabularFeatures features;
    for (const char* text : {"", "Hello.", "I need a refund for my order today.",
                             "How can I help you?", "Press one for billing.",
                             "Thank you so much, bye."}) {
        ScoreTriple t = scorer.score(utt("c", 1, CallSide::Customer, 5.0, text), {}, features);
        CHECK(t.on_simplex());
    }
}

TEST_CASE("purpose argmax iff classification qualified and no veto") {
    auto engine = poc::test::default_engine();
    RuleScorer scorer(engine);
    TabularFeatures features;
    std::vector<Utterance> fixtures = {
        utt("c", 1, CallSide::Customer, 5.0, "Hi, I need a refund for my order."),
        utt("c", 1, CallSide::Customer, 5.0, "Okay let me check that."),
        utt("c", 0, CallSide::Agent, 0.0, "How can I help you?"),
        utt("c", 9, CallSide::Customer, 100.0, "Thank you so much, have a great day, bye bye."),
        utt("c", 2, CallSide::Customer, 8.0, "There's an issue."),
        utt("c", 1, CallSide::Agent, 6.0, "I have an update on your passport status."),
    };
    for (const auto& u : fixtures) {
        ScoreTriple t = scorer.score(u, {}, features);
        bool argmax_purpose = t.p_purpose > t.p_question && t.p_purpose > t.p_negative;
        bool qualified = !engine->rule_classify(u, {}).empty();
        CHECK(argmax_purpose == qualified);
    }
}

TEST_CASE("tabular features normalize start time and flag the initiator side") {
    auto u_customer = utt("c", 1, CallSide::Customer, 90.0, "some words here");
    auto inbound = TabularFeatures::make(u_customer, CallDirection::Inbound);
    CHECK(inbound.start_time_norm == doctest::Approx(0.5));
    CHECK(inbound.is_initiator_side == 1.0);

    auto outbound = TabularFeatures::make(u_customer, CallDirection::Outbound);
    CHECK(outbound.is_initiator_side == 0.0);

    auto u_late = utt("c", 2, CallSide::Agent, 1000.0, "way past the cap");
    CHECK(TabularFeatures::make(u_late, CallDirection::Inbound).start_time_norm ==
          doctest::Approx(1.0));
}
