#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "poc/rules.hpp"
#include "test_util.hpp"

using namespace poc;
using poc::test::utt;

namespace {

bool has_tag(const std::vector<PatternMatch>& matches, PatternTag tag) {
    return std::any_of(matches.begin(), matches.end(),
                       [&](const PatternMatch& m) { return m.tag == tag; });
}

const char* kGreetingExample =
    "Hey, this is Christine. There is a police report, it was next to you guys why you heard "
    "it, and I was not sure who else to call about the whole situation this morning.";

}  // namespace

TEST_CASE("default rules file compiles to 8 positive and 6 negative rules") {
    const RuleBundle& bundle = poc::test::default_bundle();
    CHECK(bundle.patterns.positive_rules.size() == 8);
    CHECK(bundle.patterns.negative_rules.size() == 6);
    CHECK(!bundle.patterns.prompt_rules.empty());
    std::size_t positive_exprs = 0;
    for (const auto& rule : bundle.patterns.positive_rules) positive_exprs += rule.expressions.size();
    std::size_t negative_exprs = 0;
    for (const auto& rule : bundle.patterns.negative_rules) negative_exprs += rule.expressions.size();
    CHECK(positive_exprs == 56);
    CHECK(negative_exprs == 55);
    CHECK(!bundle.simplification.rules.empty());
    CHECK(!bundle.false_positive_rules.empty());
}

TEST_CASE("empty rules file is a valid empty rule set") {
    std::istringstream in("# nothing here\n\n");
    RuleBundle bundle = parse_rules(in, "empty");
    CHECK(bundle.patterns.empty());
    PatternEngine engine(bundle.patterns);
    auto u = utt("c", 0, CallSide::Customer, 1.0, "The reason for my call is the invoice.");
    CHECK(engine.match_patterns(u, {}).empty());
    CHECK_FALSE(engine.is_negative_filtered(u));
}

TEST_CASE("non-compiling expression fails the whole load and names the rule") {
    std::istringstream in(
        "[rule]\n"
        "id = broken_rule\n"
        "tag = update\n"
        "expr = \\bfine\\b\n"
        "expr = (unbalanced\n");
    try {
        parse_rules(in, "test");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        std::string message = e.what();
        CHECK(message.find("broken_rule") != std::string::npos);
        CHECK(message.find("(unbalanced") != std::string::npos);
    }
}

TEST_CASE("duplicate rule ids are rejected") {
    std::istringstream in(
        "[rule]\nid = twice\ntag = update\nexpr = a\n"
        "[rule]\nid = twice\ntag = update\nexpr = b\n");
    CHECK_THROWS_AS(parse_rules(in, "test"), ParseError);
}

TEST_CASE("all seven language-pattern examples receive their row's tag") {
    auto engine = poc::test::default_engine();

    SUBCASE("call purpose phrase") {
        auto u = utt("c", 1, CallSide::Customer, 12.0,
                     "The reason for my call is I moved to a new address, so I need to change it "
                     "on my profile.");
        CHECK(has_tag(engine->match_patterns(u, {}), PatternTag::CallPurposePhrase));
    }
    SUBCASE("desire phrase") {
        auto u = utt("c", 1, CallSide::Customer, 10.0, "Hi, I need a refund for my order.");
        CHECK(has_tag(engine->match_patterns(u, {}), PatternTag::DesirePhrase));
    }
    SUBCASE("question response follows a prompt from the other side") {
        auto prompt = utt("c", 0, CallSide::Agent, 2.0, "How can I help you?");
        CHECK(has_tag(engine->match_patterns(prompt, {}), PatternTag::QuestionPrompt));

        MatchContext context;
        context.recent_agent.push_back({0, CallSide::Agent, true, false});
        auto response = utt("c", 1, CallSide::Customer, 6.0,
                            "I received a message that my order has been delayed.");
        CHECK(has_tag(engine->match_patterns(response, context), PatternTag::QuestionResponse));
    }
    SUBCASE("greeting requires thirty tokens within the first six utterances") {
        auto u = utt("c", 2, CallSide::Customer, 9.0, kGreetingExample);
        REQUIRE(u.token_count >= 30);
        CHECK(has_tag(engine->match_patterns(u, {}), PatternTag::Greeting));
    }
    SUBCASE("problem phrase") {
        auto u = utt("c", 1, CallSide::Customer, 15.0, "I'm having an issue with the delivery.");
        CHECK(has_tag(engine->match_patterns(u, {}), PatternTag::ProblemPhrase));
    }
    SUBCASE("update") {
        auto u = utt("c", 1, CallSide::Agent, 8.0, "I have an update on your passport status.");
        CHECK(has_tag(engine->match_patterns(u, {}), PatternTag::Update));
    }
    SUBCASE("continuation question after a same-speaker signpost") {
        auto signpost = utt("c", 1, CallSide::Customer, 5.0,
                            "Hi, I'm calling because I have a question.");
        auto flags_needed = engine->context_flags(signpost);
        CHECK(flags_needed.purpose_phrase_matched);

        MatchContext context;
        context.recent_customer.push_back({1, CallSide::Customer, false, true});
        auto question = utt("c", 2, CallSide::Customer, 9.0, "Do you accept new patients?");
        CHECK(has_tag(engine->match_patterns(question, context), PatternTag::Continuation));
    }
}

TEST_CASE("greeting tag stays silent outside its bounds") {
    auto engine = poc::test::default_engine();
    SUBCASE("too few tokens") {
        auto u = utt("c", 1, CallSide::Customer, 5.0, "Hey, this is Christine.");
        CHECK_FALSE(has_tag(engine->match_patterns(u, {}), PatternTag::Greeting));
    }
    SUBCASE("too late in the call") {
        auto u = utt("c", 6, CallSide::Customer, 40.0, kGreetingExample);
        CHECK_FALSE(has_tag(engine->match_patterns(u, {}), PatternTag::Greeting));
    }
}

TEST_CASE("question response needs the prompt on the other side") {
    auto engine = poc::test::default_engine();
    auto response = utt("c", 3, CallSide::Customer, 9.0,
                        "I received a message that my order has been delayed.");
    SUBCASE("no context at all") {
        CHECK_FALSE(has_tag(engine->match_patterns(response, {}), PatternTag::QuestionResponse));
    }
    SUBCASE("prompt on the same side does not count") {
        MatchContext context;
        context.recent_customer.push_back({2, CallSide::Customer, true, false});
        CHECK_FALSE(
            has_tag(engine->match_patterns(response, context), PatternTag::QuestionResponse));
    }
    SUBCASE("prompt three utterances back on the other side is too old") {
        MatchContext context;
        context.recent_agent.push_back({2, CallSide::Agent, false, false});
        context.recent_agent.push_back({1, CallSide::Agent, false, false});
        // the prompt at index 0 has already left the two-entry window
        CHECK_FALSE(
            has_tag(engine->match_patterns(response, context), PatternTag::QuestionResponse));
    }
}

TEST_CASE("negative filter examples") {
    auto engine = poc::test::default_engine();
    CHECK(engine->is_negative_filtered(
        utt("c", 9, CallSide::Customer, 100.0, "Thank you so much, have a great day, bye bye.")));
    CHECK_FALSE(engine->is_negative_filtered(
        utt("c", 1, CallSide::Customer, 10.0,
            "The reason for my call is I moved to a new address, so I need to change it on my "
            "profile.")));
    CHECK_FALSE(engine->is_negative_filtered(utt("c", 0, CallSide::Customer, 0.0, "")));
    // The prompt itself must stay scorable as a question, not vetoed.
    CHECK_FALSE(
        engine->is_negative_filtered(utt("c", 0, CallSide::Agent, 0.0, "How can I help you?")));
}

TEST_CASE("rule_classify honors per-rule token and index constraints") {
    auto engine = poc::test::default_engine();
    const std::string problem_example =
        "I got a really big problem here. When I log in, it asks for some pin, and I really, I "
        "can't use it. So there's obviously an issue here and can you help me with it?";

    SUBCASE("the worked example qualifies at index 3") {
        auto u = utt("c", 3, CallSide::Customer, 20.0, problem_example);
        REQUIRE(u.token_count >= 12);
        auto tags = engine->rule_classify(u, {});
        CHECK(tags.count(PatternTag::ProblemPhrase) == 1);
    }
    SUBCASE("the same text at index 12 fails the order constraint") {
        auto u = utt("c", 12, CallSide::Customer, 60.0, problem_example);
        auto tags = engine->rule_classify(u, {});
        CHECK(tags.count(PatternTag::ProblemPhrase) == 0);
    }
    SUBCASE("four tokens sit below the twelve-token floor") {
        auto u = utt("c", 2, CallSide::Customer, 8.0, "There's an issue.");
        CHECK(u.token_count < 12);
        auto tags = engine->rule_classify(u, {});
        CHECK(tags.count(PatternTag::ProblemPhrase) == 0);
    }
}

TEST_CASE("negative veto wins over any positive match") {
    std::istringstream in(
        "[rule]\nid = p\ntag = desire_phrase\nexpr = \\bi need\\b\n"
        "[rule]\nid = n\ntag = negative_filter\nexpr = \\bnever mind\\b\n");
    RuleBundle bundle = parse_rules(in, "test");
    PatternEngine engine(bundle.patterns);
    auto u = utt("c", 1, CallSide::Customer, 5.0, "I need that, actually never mind.");
    CHECK_FALSE(engine.match_patterns(u, {}).empty());
    CHECK(engine.is_negative_filtered(u));
    CHECK(engine.rule_classify(u, {}).empty());
}

TEST_CASE("matching is deterministic and spans are sound") {
    auto engine = poc::test::default_engine();
    const RuleSet& rules = engine->rules();

    std::vector<Utterance> fixtures = {
        utt("c", 1, CallSide::Customer, 5.0,
            "The reason for my call is I moved to a new address, so I need to change it on my "
            "profile."),
        utt("c", 0, CallSide::Agent, 0.0, "How can I help you today?"),
        utt("c", 2, CallSide::Customer, 9.0, "I'm having an issue with the delivery."),
        utt("c", 1, CallSide::Agent, 4.0, "I have an update on your passport status."),
    };
    for (const auto& u : fixtures) {
        auto first = engine->match_patterns(u, {});
        auto second = engine->match_patterns(u, {});
        REQUIRE(first.size() == second.size());
        for (std::size_t i = 0; i < first.size(); ++i) {
            CHECK(first[i].tag == second[i].tag);
            CHECK(first[i].begin == second[i].begin);
            CHECK(first[i].end == second[i].end);

            // The extracted span must itself match one of the rule's expressions.
            REQUIRE(first[i].end <= u.text.size());
            std::string span = u.text.substr(first[i].begin, first[i].end - first[i].begin);
            const Rule* rule = nullptr;
            for (const auto* candidates : {&rules.positive_rules, &rules.prompt_rules}) {
                for (const auto& r : *candidates) {
                    if (r.id == first[i].rule_id) rule = &r;
                }
            }
            REQUIRE(rule != nullptr);
            bool span_matches = false;
            for (const auto& re : rule->compiled) {
                if (std::regex_search(span, re)) span_matches = true;
            }
            CHECK(span_matches);
        }
    }
}
