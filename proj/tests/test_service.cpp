#include <doctest.h>

#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "poc/service.hpp"
#include "test_util.hpp"

using namespace poc;
using nlohmann::json;

namespace {

std::shared_ptr<EventProcessor> make_processor(ServiceConfig config = {}) {
    auto detector = std::make_shared<const Detector>(
        poc::test::default_engine(),
        std::make_shared<const RuleScorer>(poc::test::default_engine()),
        poc::test::default_simplifier());
    return std::make_shared<EventProcessor>(detector, config);
}

std::string utterance_line(const std::string& call, int index, const std::string& side, double t,
                           const std::string& text) {
    return json{{"type", "utterance"}, {"call_id", call},   {"index", index},
                {"side", side},        {"start_time_s", t}, {"text", text}}
        .dump();
}

}  // namespace

TEST_CASE("an early purpose utterance produces one update event") {
    auto processor = make_processor();
    auto responses = processor->process_line(utterance_line(
        "c1", 0, "customer", 2.0,
        "The reason for my call is I moved to a new address, so I need to change it on my "
        "profile."));
    REQUIRE(responses.size() == 1);
    json update = json::parse(responses[0]);
    CHECK(update["type"] == "purpose_update");
    CHECK(update["call_id"] == "c1");
    CHECK(update["utterance_index"] == 0);
    CHECK(update["combined_score"].get<double>() > 0.85);
    CHECK(!update["simplified_text"].get<std::string>().empty());
    CHECK(update["tags"].is_array());
}

TEST_CASE("an utterance past the gate window yields no update") {
    auto processor = make_processor();
    auto responses = processor->process_line(utterance_line(
        "c2", 35, "customer", 50.0, "The reason for my call is I moved to a new address."));
    CHECK(responses.empty());
}

TEST_CASE("events after call_end are error events and the stream continues") {
    auto processor = make_processor();
    CHECK(processor->process_line(utterance_line("c3", 0, "agent", 0.0, "Hello there friend."))
              .empty());
    auto end_response =
        processor->process_line(json{{"type", "call_end"}, {"call_id", "c3"}}.dump());
    CHECK(end_response.empty());

    auto after = processor->process_line(utterance_line("c3", 1, "customer", 4.0,
                                                        "Hi, I need a refund for my order."));
    REQUIRE(after.size() == 1);
    json error = json::parse(after[0]);
    CHECK(error["type"] == "error");
    CHECK(error["call_id"] == "c3");

    // Other sessions are unaffected.
    auto other = processor->process_line(utterance_line("c4", 0, "customer", 1.0,
                                                        "Hi, I need a refund for my order."));
    REQUIRE(other.size() == 1);
    CHECK(json::parse(other[0])["type"] == "purpose_update");
}

TEST_CASE("double call_end is an error event") {
    auto processor = make_processor();
    processor->process_line(utterance_line("c5", 0, "agent", 0.0, "Hello there friend."));
    CHECK(processor->process_line(json{{"type", "call_end"}, {"call_id", "c5"}}.dump()).empty());
    auto again = processor->process_line(json{{"type", "call_end"}, {"call_id", "c5"}}.dump());
    REQUIRE(again.size() == 1);
    CHECK(json::parse(again[0])["type"] == "error");
}

TEST_CASE("malformed and unknown events are contained") {
    auto processor = make_processor();
    auto bad = processor->process_line("{oops");
    REQUIRE(bad.size() == 1);
    CHECK(json::parse(bad[0])["type"] == "error");

    auto unknown = processor->process_line(json{{"type", "telemetry"}}.dump());
    REQUIRE(unknown.size() == 1);
    CHECK(json::parse(unknown[0])["type"] == "error");

    auto stats = processor->stats();
    CHECK(stats.errors == 2);

    // The processor still works afterwards.
    auto ok = processor->process_line(utterance_line("c6", 0, "customer", 1.0,
                                                     "Hi, I need a refund for my order."));
    CHECK(ok.size() == 1);
}

TEST_CASE("session limit produces an error event") {
    ServiceConfig config;
    config.max_sessions = 2;
    auto processor = make_processor(config);
    processor->process_line(utterance_line("a", 0, "agent", 0.0, "Hello there friend."));
    processor->process_line(utterance_line("b", 0, "agent", 0.0, "Hello there friend."));
    auto third = processor->process_line(utterance_line("c", 0, "agent", 0.0, "Hello there."));
    REQUIRE(third.size() == 1);
    CHECK(json::parse(third[0])["type"] == "error");
}

TEST_CASE("out-of-order indices within a session are error events") {
    auto processor = make_processor();
    processor->process_line(utterance_line("c7", 2, "agent", 3.0, "Hello there friend."));
    auto regress = processor->process_line(utterance_line("c7", 1, "agent", 4.0, "More words."));
    REQUIRE(regress.size() == 1);
    CHECK(json::parse(regress[0])["type"] == "error");
}

TEST_CASE("call_meta sets the direction for tabular features") {
    auto processor = make_processor();
    auto meta = processor->process_line(
        json{{"type", "call_meta"}, {"call_id", "c8"}, {"direction", "outbound"}}.dump());
    CHECK(meta.empty());
}

TEST_CASE("pipe mode echoes updates for a small stream") {
    auto processor = make_processor();
    std::istringstream in(
        utterance_line("p1", 0, "agent", 0.0, "Thanks for calling Northwind, this is Alex.") +
        "\n" +
        utterance_line("p1", 1, "customer", 4.0, "Hi, I need a refund for my order.") + "\n" +
        json{{"type", "call_end"}, {"call_id", "p1"}}.dump() + "\n");
    std::ostringstream out;
    std::size_t lines = run_pipe_mode(*processor, in, out);
    CHECK(lines == 3);
    std::istringstream check(out.str());
    std::string line;
    REQUIRE(std::getline(check, line));
    json update = json::parse(line);
    CHECK(update["type"] == "purpose_update");
    CHECK(update["utterance_index"] == 1);

    auto stats = processor->stats();
    CHECK(stats.utterances == 2);
    CHECK(stats.updates == 1);
    CHECK(stats.p95_ms >= stats.p50_ms);
}

TEST_CASE("tcp server round-trips events and serves stats") {
    ServiceConfig config;
    config.listen_address = "127.0.0.1:0";  // ephemeral port
    config.stats_port = 18734;
    auto processor = make_processor(config);
    StreamServer server(processor, config);
    server.start();
    REQUIRE(server.port() > 0);

    {
        httplib::Client probe("127.0.0.1", config.stats_port);
        // Give both listeners a moment on slow machines.
        for (int i = 0; i < 50; ++i) {
            auto res = probe.Get("/stats");
            if (res && res->status == 200) break;
            std::this_thread::sleep_for(std::chrono::milliseconds(20));
        }
    }

    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    REQUIRE(fd >= 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(server.port()));
    inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
    REQUIRE(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0);

    std::string payload =
        utterance_line("tcp1", 0, "customer", 1.0, "Hi, I need a refund for my order.") + "\n";
    REQUIRE(::send(fd, payload.data(), payload.size(), 0) ==
            static_cast<ssize_t>(payload.size()));

    std::string response;
    char buf[4096];
    while (response.find('\n') == std::string::npos) {
        ssize_t n = ::recv(fd, buf, sizeof(buf), 0);
        REQUIRE(n > 0);
        response.append(buf, static_cast<std::size_t>(n));
    }
    json update = json::parse(response.substr(0, response.find('\n')));
    CHECK(update["type"] == "purpose_update");
    ::close(fd);

    httplib::Client client("127.0.0.1", config.stats_port);
    auto res = client.Get("/stats");
    REQUIRE(res);
    CHECK(res->status == 200);
    json stats = json::parse(res->body);
    CHECK(stats["utterances"].get<int>() >= 1);
    CHECK(stats.contains("p95_ms"));
    CHECK(stats.contains("sessions_active"));

    server.stop();
}

TEST_CASE("concurrent sessions stay isolated and in order") {
    auto processor = make_processor();
    constexpr int kThreads = 4;
    constexpr int kUtterancesPerCall = 40;

    std::vector<std::thread> workers;
    std::vector<std::optional<std::uint32_t>> detected(kThreads);
    for (int t = 0; t < kThreads; ++t) {
        workers.emplace_back([&, t] {
            std::string call = "conc-" + std::to_string(t);
            std::optional<std::uint32_t> best;
            for (int i = 0; i < kUtterancesPerCall; ++i) {
                std::string text = (i == 2 + t)
                                       ? "Hi, I need a refund for my order."
                                       : "let me take another look at the totals for you";
                auto responses = processor->process_line(
                    utterance_line(call, i, i % 2 ? "customer" : "agent", i * 2.0, text));
                for (const auto& r : responses) {
                    json record = json::parse(r);
                    REQUIRE(record["type"] == "purpose_update");
                    best = record["utterance_index"].get<std::uint32_t>();
                }
            }
            processor->process_line(json{{"type", "call_end"}, {"call_id", call}}.dump());
            detected[static_cast<std::size_t>(t)] = best;
        });
    }
    for (auto& w : workers) w.join();

    for (int t = 0; t < kThreads; ++t) {
        REQUIRE(detected[static_cast<std::size_t>(t)].has_value());
        CHECK(*detected[static_cast<std::size_t>(t)] == static_cast<std::uint32_t>(2 + t));
    }
    auto stats = processor->stats();
    CHECK(stats.errors == 0);
    CHECK(stats.utterances == kThreads * kUtterancesPerCall);
    CHECK(stats.sessions_total == kThreads);
}

TEST_CASE("gold records in a replayed corpus are ignored") {
    auto processor = make_processor();
    auto response = processor->process_line(
        json{{"type", "gold"}, {"call_id", "g1"}, {"purpose_index", 2}}.dump());
    CHECK(response.empty());
    CHECK(processor->stats().errors == 0);
}

TEST_CASE("service config loads overrides and rejects unknown keys") {
    auto dir = std::filesystem::temp_directory_path();
    auto good_path = dir / "poc_service_good.json";
    {
        std::ofstream out(good_path);
        out << R"({"rules_path":"data/default.rules","deadline_s":1.5,"max_tokens":120,)"
            << R"("fallback_threshold":0.7})";
    }
    ServiceConfig config = load_service_config(good_path.string());
    CHECK(config.deadline_s == doctest::Approx(1.5));
    CHECK(config.gate.max_tokens == 120);
    CHECK(config.thresholds.fallback == doctest::Approx(0.7));
    std::filesystem::remove(good_path);

    auto bad_path = dir / "poc_service_bad.json";
    {
        std::ofstream out(bad_path);
        out << R"({"deadine_s": 1.0})";  // typo must fail loudly
    }
    CHECK_THROWS_AS(load_service_config(bad_path.string()), ConfigError);
    std::filesystem::remove(bad_path);
}
