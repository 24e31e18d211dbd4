#include <doctest.h>

#include <sstream>

#include "poc/transcript.hpp"
#include "poc/synth.hpp"
#include "test_util.hpp"

using namespace poc;

namespace {

std::string line(const std::string& call, int index, const std::string& side, double t,
                 const std::string& text) {
    nlohmann::json record{{"type", "utterance"}, {"call_id", call},   {"index", index},
                          {"side", side},        {"start_time_s", t}, {"text", text}};
    return record.dump() + "\n";
}

}  // namespace

TEST_CASE("three well-formed lines parse into one call") {
    std::istringstream in(line("c1", 0, "agent", 0.0, "Thanks for calling.") +
                          line("c1", 1, "customer", 3.5, "Hi, I need a refund.") +
                          line("c1", 2, "agent", 8.0, "Let me check."));
    Call call = parse_transcript(in);
    CHECK(call.call_id == "c1");
    REQUIRE(call.utterances.size() == 3);
    CHECK(call.utterances[0].index == 0);
    CHECK(call.utterances[1].index == 1);
    CHECK(call.utterances[2].index == 2);
    CHECK(call.utterances[1].token_count == 5);
}

TEST_CASE("events out of index order are re-sorted") {
    std::istringstream in(line("c1", 2, "agent", 9.0, "Let me check.") +
                          line("c1", 0, "agent", 0.0, "Thanks for calling.") +
                          line("c1", 1, "customer", 3.0, "Hi, I need a refund."));
    Call call = parse_transcript(in);
    REQUIRE(call.utterances.size() == 3);
    CHECK(call.utterances[0].index == 0);
    CHECK(call.utterances[2].index == 2);
}

TEST_CASE("negative start time is a validation error") {
    std::istringstream in(line("c1", 0, "agent", -1.0, "Hello there."));
    CHECK_THROWS_AS(parse_transcript(in), ParseError);
}

TEST_CASE("duplicate utterance index is rejected") {
    std::istringstream in(line("c1", 4, "agent", 1.0, "one thing") +
                          line("c1", 4, "customer", 2.0, "another thing"));
    CHECK_THROWS_AS(parse_transcript(in), ParseError);
}

TEST_CASE("malformed line names the line number") {
    std::istringstream in(line("c1", 0, "agent", 0.0, "fine") + "{not json\n");
    try {
        parse_transcript(in);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
}

TEST_CASE("decreasing start times within a call are rejected") {
    std::istringstream in(line("c1", 0, "agent", 10.0, "Later words.") +
                          line("c1", 1, "customer", 5.0, "Earlier words."));
    CHECK_THROWS_AS(parse_transcript(in), ValidationError);
}

TEST_CASE("unknown record type is rejected") {
    std::istringstream in(std::string(R"({"type":"mystery","call_id":"c1"})") + "\n");
    CHECK_THROWS_AS(parse_corpus(in), ParseError);
}

TEST_CASE("unknown fields are ignored") {
    nlohmann::json record{{"type", "utterance"}, {"call_id", "c1"},  {"index", 0},
                          {"side", "agent"},     {"start_time_s", 0.0}, {"text", "Hello there."},
                          {"confidence", 0.93}};
    std::istringstream in(record.dump() + "\n");
    Call call = parse_transcript(in);
    CHECK(call.utterances.size() == 1);
}

TEST_CASE("serialize then parse round-trips generated corpora") {
    GenSpec spec;
    spec.n_calls = 40;
    spec.seed = 99;
    Corpus corpus = generate(spec, poc::test::default_templates());

    std::istringstream in(serialize(corpus));
    Corpus parsed = parse_corpus(in);
    REQUIRE(parsed.calls.size() == corpus.calls.size());
    for (std::size_t i = 0; i < corpus.calls.size(); ++i) {
        const Call& a = corpus.calls[i];
        const Call& b = parsed.calls[i];
        CHECK(a.call_id == b.call_id);
        CHECK(a.direction == b.direction);
        CHECK(a.domain == b.domain);
        CHECK(a.duration_s == doctest::Approx(b.duration_s).epsilon(1e-12));
        REQUIRE(a.utterances.size() == b.utterances.size());
        for (std::size_t j = 0; j < a.utterances.size(); ++j) {
            CHECK(a.utterances[j].text == b.utterances[j].text);
            CHECK(a.utterances[j].side == b.utterances[j].side);
            CHECK(a.utterances[j].start_time_s == b.utterances[j].start_time_s);
            CHECK(a.utterances[j].token_count == b.utterances[j].token_count);
        }
    }
    CHECK(parsed.gold.size() == corpus.gold.size());
    // Byte-level: serializing the parse reproduces the stream.
    CHECK(serialize(parsed) == serialize(corpus));
}
