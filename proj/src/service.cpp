#include "poc/service.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <httplib.h>
#include <json.hpp>

#include "poc/transcript.hpp"

namespace poc {

using nlohmann::json;

ServiceConfig load_service_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ParseError("config file " + path + ": " + e.what());
    }

    ServiceConfig config;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        const std::string& key = it.key();
        const json& v = it.value();
        if (key == "rules_path") config.rules_path = v.get<std::string>();
        else if (key == "model_path") config.model_path = v.get<std::string>();
        else if (key == "listen_address") config.listen_address = v.get<std::string>();
        else if (key == "stats_port") config.stats_port = v.get<int>();
        else if (key == "max_sessions") config.max_sessions = v.get<std::size_t>();
        else if (key == "deadline_s") config.deadline_s = v.get<double>();
        else if (key == "idle_timeout_s") config.idle_timeout_s = v.get<double>();
        else if (key == "max_start_time_s") config.gate.max_start_time_s = v.get<double>();
        else if (key == "max_utterance_index") config.gate.max_utterance_index = v.get<std::uint32_t>();
        else if (key == "min_tokens") config.gate.min_tokens = v.get<std::uint32_t>();
        else if (key == "max_tokens") config.gate.max_tokens = v.get<std::uint32_t>();
        else if (key == "signpost_threshold") config.thresholds.signpost = v.get<double>();
        else if (key == "fallback_threshold") config.thresholds.fallback = v.get<double>();
        else throw ConfigError("config file " + path + ": unknown key '" + key + "'");
    }
    if (config.deadline_s <= 0.0) throw ConfigError("deadline_s must be positive");
    config.gate.validate();
    config.thresholds.validate();
    return config;
}

void LatencyRecorder::record(double millis) {
    std::lock_guard lock(mutex_);
    // Bounded so a long-running service does not grow without limit.
    if (samples_.size() >= 1u << 20) {
        samples_.erase(samples_.begin(), samples_.begin() + (samples_.size() / 2));
    }
    samples_.push_back(millis);
}

double LatencyRecorder::percentile(double p) const {
    std::vector<double> sorted;
    {
        std::lock_guard lock(mutex_);
        if (samples_.empty()) return 0.0;
        sorted = samples_;
    }
    // Sorting happens outside the lock so stats reads never stall recording.
    std::sort(sorted.begin(), sorted.end());
    double rank = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(sorted.size() - 1);
    auto lo = static_cast<std::size_t>(rank);
    auto hi = std::min(lo + 1, sorted.size() - 1);
    double frac = rank - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

std::uint64_t LatencyRecorder::count() const {
    std::lock_guard lock(mutex_);
    return samples_.size();
}

std::string StatsSnapshot::to_json() const {
    json doc{{"utterances", utterances},
             {"updates", updates},
             {"errors", errors},
             {"deadline_overruns", deadline_overruns},
             {"sessions_active", sessions_active},
             {"sessions_total", sessions_total},
             {"p50_ms", p50_ms},
             {"p95_ms", p95_ms}};
    return doc.dump();
}

EventProcessor::EventProcessor(std::shared_ptr<const Detector> detector, ServiceConfig config)
    : detector_(std::move(detector)), config_(std::move(config)) {}

std::shared_ptr<EventProcessor::Session> EventProcessor::find_or_create(
    const std::string& call_id, bool create) {
    std::lock_guard lock(sessions_mutex_);
    auto it = sessions_.find(call_id);
    if (it != sessions_.end()) return it->second;
    if (!create) return nullptr;
    if (sessions_.size() >= config_.max_sessions) {
        throw StateError("session limit reached (" + std::to_string(config_.max_sessions) + ")");
    }
    auto session = std::make_shared<Session>();
    session->state = detector_->open_session(call_id);
    session->last_activity = std::chrono::steady_clock::now();
    sessions_.emplace(call_id, session);
    ++sessions_total_;
    return session;
}

void EventProcessor::evict_idle() {
    const auto now = std::chrono::steady_clock::now();
    const auto timeout = std::chrono::duration<double>(config_.idle_timeout_s);
    std::lock_guard lock(sessions_mutex_);
    for (auto it = sessions_.begin(); it != sessions_.end();) {
        if (now - it->second->last_activity > timeout) {
            it = sessions_.erase(it);
        } else {
            ++it;
        }
    }
}

std::vector<std::string> EventProcessor::process_line(const std::string& line) {
    std::vector<std::string> responses;
    if (line.find_first_not_of(" \t\r") == std::string::npos) return responses;

    auto error_response = [&](const std::string& message, const std::string& call_id = "") {
        ++errors_;
        json record{{"type", "error"}, {"message", message}};
        if (!call_id.empty()) record["call_id"] = call_id;
        responses.push_back(record.dump());
    };

    if (++events_since_sweep_ % 512 == 0) evict_idle();

    json record;
    try {
        record = json::parse(line);
    } catch (const json::exception& e) {
        error_response(std::string("malformed event: ") + e.what());
        return responses;
    }

    const std::string type = record.value("type", "");
    const std::string call_id = record.value("call_id", "");

    try {
        if (type == "utterance") {
            Utterance utterance = parse_utterance_event(record);
            auto session = find_or_create(utterance.call_id, true);

            const auto started = std::chrono::steady_clock::now();
            std::optional<PurposeDecision> update;
            {
                std::lock_guard session_lock(session->mutex);
                if (session->ended) {
                    throw StateError("call '" + utterance.call_id + "' already ended");
                }
                session->last_activity = started;
                update = detector_->process(*session->state, utterance);
            }
            const auto finished = std::chrono::steady_clock::now();
            const double ms = std::chrono::duration<double, std::milli>(finished - started).count();
            latency_.record(ms);
            ++utterances_;
            if (ms > config_.deadline_s * 1000.0) {
                ++overruns_;
                std::cerr << "deadline overrun: call '" << utterance.call_id << "' index "
                          << utterance.index << " took " << ms << " ms\n";
            }

            if (update) {
                ++updates_;
                json out{{"type", "purpose_update"},
                         {"call_id", update->call_id},
                         {"utterance_index", update->utterance_index},
                         {"combined_score", update->combined_score},
                         {"text", update->original_text},
                         {"simplified_text", update->simplified_text}};
                std::vector<std::string> tags;
                for (PatternTag tag : update->tags) tags.emplace_back(to_string(tag));
                out["tags"] = tags;
                responses.push_back(out.dump());
            }
        } else if (type == "call_meta") {
            if (call_id.empty()) throw ValidationError("call_meta needs a call_id");
            auto session = find_or_create(call_id, true);
            std::lock_guard session_lock(session->mutex);
            session->last_activity = std::chrono::steady_clock::now();
            session->state->set_direction(
                parse_call_direction(record.value("direction", "unknown")));
        } else if (type == "call_end") {
            if (call_id.empty()) throw ValidationError("call_end needs a call_id");
            auto session = find_or_create(call_id, false);
            if (!session) throw StateError("call '" + call_id + "' is unknown");
            std::lock_guard session_lock(session->mutex);
            if (session->ended) throw StateError("call '" + call_id + "' already ended");
            session->ended = true;
            session->last_activity = std::chrono::steady_clock::now();
            session->state->close();
        } else if (type == "gold") {
            // Corpus files carry gold annotations; harmless on replay.
        } else {
            throw ValidationError("unknown event type: '" + type + "'");
        }
    } catch (const std::exception& e) {
        error_response(e.what(), call_id);
    }
    return responses;
}

StatsSnapshot EventProcessor::stats() const {
    StatsSnapshot snapshot;
    snapshot.utterances = utterances_;
    snapshot.updates = updates_;
    snapshot.errors = errors_;
    snapshot.deadline_overruns = overruns_;
    snapshot.sessions_total = sessions_total_;
    {
        std::lock_guard lock(sessions_mutex_);
        snapshot.sessions_active = sessions_.size();
    }
    snapshot.p50_ms = latency_.percentile(50.0);
    snapshot.p95_ms = latency_.percentile(95.0);
    return snapshot;
}

std::size_t run_pipe_mode(EventProcessor& processor, std::istream& in, std::ostream& out) {
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line)) {
        ++lines;
        for (const auto& response : processor.process_line(line)) {
            out << response << '\n';
        }
        out.flush();
    }
    return lines;
}

// ---------------------------------------------------------------------------
// TCP transport
// ---------------------------------------------------------------------------

namespace {

std::pair<std::string, int> split_address(const std::string& address) {
    auto colon = address.rfind(':');
    if (colon == std::string::npos) {
        throw ConfigError("listen address must be host:port, got '" + address + "'");
    }
    std::string host = address.substr(0, colon);
    int port = 0;
    try {
        port = std::stoi(address.substr(colon + 1));
    } catch (const std::exception&) {
        throw ConfigError("bad port in listen address '" + address + "'");
    }
    return {host, port};
}

}  // namespace

StreamServer::StreamServer(std::shared_ptr<EventProcessor> processor, ServiceConfig config)
    : processor_(std::move(processor)), config_(std::move(config)) {}

StreamServer::~StreamServer() { stop(); }

void StreamServer::start() {
    auto [host, port] = split_address(config_.listen_address);

    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw ConfigError("cannot create listen socket");
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        throw ConfigError("cannot parse listen host '" + host + "'");
    }
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(fd);
        throw ConfigError("cannot bind " + config_.listen_address);
    }
    if (::listen(fd, 64) != 0) {
        ::close(fd);
        throw ConfigError("cannot listen on " + config_.listen_address);
    }

    sockaddr_in bound{};
    socklen_t len = sizeof(bound);
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);
    listen_fd_.store(fd);

    running_ = true;
    accept_thread_ = std::thread([this] { accept_loop(); });

    if (config_.stats_port > 0) {
        auto* server = new httplib::Server();
        stats_server_ = server;
        server->Get("/stats", [this](const httplib::Request&, httplib::Response& res) {
            res.set_content(processor_->stats().to_json(), "application/json");
        });
        int stats_port = config_.stats_port;
        stats_thread_ = std::thread([server, host = std::string("127.0.0.1"), stats_port] {
            server->listen(host, stats_port);
        });
    }
}

int StreamServer::port() const { return port_; }

void StreamServer::accept_loop() {
    while (running_) {
        int fd = ::accept(listen_fd_.load(), nullptr, nullptr);
        if (fd < 0) {
            if (!running_) break;
            continue;
        }
        std::lock_guard lock(conn_mutex_);
        conn_fds_.push_back(fd);
        connections_.emplace_back([this, fd] { serve_connection(fd); });
    }
}

void StreamServer::serve_connection(int fd) {
    std::string buffer;
    char chunk[4096];
    while (running_) {
        ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
        if (n <= 0) break;
        buffer.append(chunk, static_cast<std::size_t>(n));
        std::size_t newline;
        while ((newline = buffer.find('\n')) != std::string::npos) {
            std::string line = buffer.substr(0, newline);
            buffer.erase(0, newline + 1);
            for (const auto& response : processor_->process_line(line)) {
                std::string payload = response + "\n";
                ::send(fd, payload.data(), payload.size(), MSG_NOSIGNAL);
            }
        }
    }
    ::close(fd);
}

void StreamServer::stop() {
    if (!running_.exchange(false)) return;
    int fd = listen_fd_.exchange(-1);
    if (fd >= 0) {
        ::shutdown(fd, SHUT_RDWR);
        ::close(fd);
    }
    if (accept_thread_.joinable()) accept_thread_.join();
    {
        std::lock_guard lock(conn_mutex_);
        for (int fd : conn_fds_) ::shutdown(fd, SHUT_RDWR);
        conn_fds_.clear();
        for (auto& t : connections_) {
            if (t.joinable()) t.join();
        }
        connections_.clear();
    }
    if (stats_server_) {
        auto* server = static_cast<httplib::Server*>(stats_server_);
        server->stop();
        if (stats_thread_.joinable()) stats_thread_.join();
        delete server;
        stats_server_ = nullptr;
    }
}

void StreamServer::wait() {
    if (accept_thread_.joinable()) accept_thread_.join();
}

}  // namespace poc
