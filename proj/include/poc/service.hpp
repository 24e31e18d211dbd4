#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "poc/detector.hpp"
#include "poc/selection.hpp"
#include "poc/types.hpp"

namespace poc {

struct ServiceConfig {
    std::string rules_path = "data/default.rules";
    std::string model_path;  // empty -> rule scorer
    GateConfig gate;
    ThresholdTable thresholds;
    std::string listen_address = "127.0.0.1:7333";
    int stats_port = 0;  // 0 -> stats endpoint disabled
    std::size_t max_sessions = 10000;
    double deadline_s = 3.0;          // per-utterance processing deadline
    double idle_timeout_s = 600.0;    // session eviction
};

// Reads a JSON config file; unknown keys are rejected so typos fail loudly.
ServiceConfig load_service_config(const std::string& path);

class LatencyRecorder {
public:
    void record(double millis);
    double percentile(double p) const;  // p in [0,100]
    std::uint64_t count() const;

private:
    mutable std::mutex mutex_;
    std::vector<double> samples_;
};

struct StatsSnapshot {
    std::uint64_t utterances = 0;
    std::uint64_t updates = 0;
    std::uint64_t errors = 0;
    std::uint64_t deadline_overruns = 0;
    std::size_t sessions_active = 0;
    std::uint64_t sessions_total = 0;
    double p50_ms = 0.0;
    double p95_ms = 0.0;

    std::string to_json() const;
};

// Protocol core, transport-agnostic: one structured record per line in, zero
// or more records out. Sessions for different call_ids are processed
// concurrently; events within one call_id are serialized on the session
// mutex. A malformed event yields an error record and never disturbs other
// sessions.
class EventProcessor {
public:
    EventProcessor(std::shared_ptr<const Detector> detector, ServiceConfig config);

    std::vector<std::string> process_line(const std::string& line);

    StatsSnapshot stats() const;

    // Drops sessions idle longer than the configured timeout.
    void evict_idle();

private:
    struct Session {
        std::mutex mutex;
        std::unique_ptr<CallSession> state;
        std::chrono::steady_clock::time_point last_activity;
        bool ended = false;
    };

    std::shared_ptr<Session> find_or_create(const std::string& call_id, bool create);

    std::shared_ptr<const Detector> detector_;
    ServiceConfig config_;

    mutable std::mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;

    LatencyRecorder latency_;
    std::atomic<std::uint64_t> utterances_{0};
    std::atomic<std::uint64_t> updates_{0};
    std::atomic<std::uint64_t> errors_{0};
    std::atomic<std::uint64_t> overruns_{0};
    std::atomic<std::uint64_t> sessions_total_{0};
    std::atomic<std::uint64_t> events_since_sweep_{0};
};

// Reads events from `in`, writes responses to `out`, one record per line.
// Returns the number of processed lines.
std::size_t run_pipe_mode(EventProcessor& processor, std::istream& in, std::ostream& out);

// Newline-delimited event stream over TCP, one thread per connection, plus an
// optional HTTP stats endpoint. Shared rule/model state is read-only after
// startup.
class StreamServer {
public:
    StreamServer(std::shared_ptr<EventProcessor> processor, ServiceConfig config);
    ~StreamServer();

    void start();           // binds and spawns the accept loop
    void stop();            // closes the listener and joins all threads
    int port() const;       // actual bound port (useful with port 0)
    void wait();            // blocks until stop() is called

private:
    void accept_loop();
    void serve_connection(int fd);

    std::shared_ptr<EventProcessor> processor_;
    ServiceConfig config_;
    std::atomic<int> listen_fd_{-1};
    int port_ = 0;
    std::atomic<bool> running_{false};
    std::thread accept_thread_;
    std::thread stats_thread_;
    std::mutex conn_mutex_;
    std::vector<std::thread> connections_;
    std::vector<int> conn_fds_;
    void* stats_server_ = nullptr;  // httplib::Server, kept out of the header
};

}  // namespace poc
