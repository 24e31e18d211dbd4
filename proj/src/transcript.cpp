#include "poc/transcript.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "poc/tokenize.hpp"

namespace poc {

using nlohmann::json;

const Call* Corpus::find_call(const std::string& call_id) const {
    for (const auto& call : calls) {
        if (call.call_id == call_id) return &call;
    }
    return nullptr;
}

json utterance_event(const Utterance& u) {
    return json{{"type", "utterance"},       {"call_id", u.call_id},
                {"index", u.index},          {"side", to_string(u.side)},
                {"start_time_s", u.start_time_s}, {"text", u.text}};
}

json call_meta_event(const Call& call) {
    return json{{"type", "call_meta"},
                {"call_id", call.call_id},
                {"direction", to_string(call.direction)},
                {"domain", to_string(call.domain)},
                {"duration_s", call.duration_s}};
}

json call_end_event(const std::string& call_id) {
    return json{{"type", "call_end"}, {"call_id", call_id}};
}

json gold_event(const GoldAnnotation& gold) {
    json record{{"type", "gold"}, {"call_id", gold.call_id}};
    if (gold.purpose_index) {
        record["purpose_index"] = *gold.purpose_index;
    } else {
        record["purpose_index"] = nullptr;
    }
    if (gold.pattern) record["pattern"] = to_string(*gold.pattern);
    return record;
}

Utterance parse_utterance_event(const json& record) {
    if (!record.contains("call_id") || !record["call_id"].is_string()) {
        throw ValidationError("utterance event is missing call_id");
    }
    if (!record.contains("index") || !record["index"].is_number_unsigned()) {
        throw ValidationError("utterance event needs a non-negative index");
    }
    if (!record.contains("text") || !record["text"].is_string()) {
        throw ValidationError("utterance event is missing text");
    }
    double start = record.value("start_time_s", 0.0);
    if (start < 0.0) {
        throw ValidationError("utterance start_time_s must be non-negative");
    }
    CallSide side = parse_call_side(record.value("side", "customer"));
    return make_utterance(record["call_id"].get<std::string>(),
                          record["index"].get<std::uint32_t>(), side, start,
                          record["text"].get<std::string>());
}

namespace {

struct LineReader {
    std::istream& in;
    std::size_t line_no = 0;

    std::optional<json> next() {
        std::string line;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            try {
                return json::parse(line);
            } catch (const json::exception& e) {
                throw ParseError(std::string("malformed record: ") + e.what(), line_no);
            }
        }
        return std::nullopt;
    }
};

void finalize_call(Call& call, std::size_t line_hint) {
    std::stable_sort(call.utterances.begin(), call.utterances.end(),
                     [](const Utterance& a, const Utterance& b) { return a.index < b.index; });
    for (std::size_t i = 0; i < call.utterances.size(); ++i) {
        const auto& u = call.utterances[i];
        if (i > 0) {
            const auto& prev = call.utterances[i - 1];
            if (u.index == prev.index) {
                throw ParseError("duplicate utterance index " + std::to_string(u.index) +
                                     " in call '" + call.call_id + "'",
                                 line_hint);
            }
            if (u.start_time_s < prev.start_time_s) {
                throw ValidationError("start_time_s decreases at index " +
                                      std::to_string(u.index) + " in call '" + call.call_id +
                                      "'");
            }
        }
        if (u.token_count == 0) {
            throw ValidationError("utterance " + std::to_string(u.index) + " in call '" +
                                  call.call_id + "' has no word tokens");
        }
    }
    if (call.duration_s <= 0.0 && !call.utterances.empty()) {
        call.duration_s = call.utterances.back().start_time_s;
    }
}

}  // namespace

Corpus parse_corpus(std::istream& in) {
    Corpus corpus;
    std::map<std::string, std::size_t> call_index;
    LineReader reader{in};

    auto call_for = [&](const std::string& call_id) -> Call& {
        auto it = call_index.find(call_id);
        if (it == call_index.end()) {
            call_index.emplace(call_id, corpus.calls.size());
            Call call;
            call.call_id = call_id;
            corpus.calls.push_back(std::move(call));
            return corpus.calls.back();
        }
        return corpus.calls[it->second];
    };

    while (auto record = reader.next()) {
        const json& r = *record;
        std::string type = r.value("type", "");
        try {
            if (type == "utterance") {
                Utterance u = parse_utterance_event(r);
                call_for(u.call_id).utterances.push_back(std::move(u));
            } else if (type == "call_meta") {
                Call& call = call_for(r.at("call_id").get<std::string>());
                call.direction = parse_call_direction(r.value("direction", "unknown"));
                call.domain = parse_call_domain(r.value("domain", "unknown"));
                call.duration_s = r.value("duration_s", 0.0);
            } else if (type == "gold") {
                GoldAnnotation gold;
                gold.call_id = r.at("call_id").get<std::string>();
                if (r.contains("purpose_index") && !r["purpose_index"].is_null()) {
                    gold.purpose_index = r["purpose_index"].get<std::uint32_t>();
                }
                if (r.contains("pattern") && r["pattern"].is_string()) {
                    gold.pattern = parse_pattern_tag(r["pattern"].get<std::string>());
                }
                corpus.gold[gold.call_id] = std::move(gold);
            } else if (type == "call_end") {
                // No-op in batch form; ordering is given by indices.
            } else {
                throw ValidationError("unknown record type: '" + type + "'");
            }
        } catch (const json::exception& e) {
            throw ParseError(std::string("bad record: ") + e.what(), reader.line_no);
        } catch (const ValidationError& e) {
            throw ParseError(e.what(), reader.line_no);
        }
    }

    for (auto& call : corpus.calls) finalize_call(call, reader.line_no);
    return corpus;
}

Call parse_transcript(std::istream& in) {
    Corpus corpus = parse_corpus(in);
    if (corpus.calls.empty()) {
        throw ParseError("transcript holds no utterances");
    }
    if (corpus.calls.size() > 1) {
        throw ParseError("transcript holds more than one call (found " +
                         std::to_string(corpus.calls.size()) + ")");
    }
    return std::move(corpus.calls.front());
}

std::string serialize(const Call& call) {
    std::ostringstream out;
    out << call_meta_event(call).dump() << '\n';
    for (const auto& u : call.utterances) {
        out << utterance_event(u).dump() << '\n';
    }
    return out.str();
}

std::string serialize(const Corpus& corpus) {
    std::ostringstream out;
    for (const auto& call : corpus.calls) {
        out << serialize(call);
        auto gold = corpus.gold.find(call.call_id);
        if (gold != corpus.gold.end()) {
            out << gold_event(gold->second).dump() << '\n';
        }
    }
    return out.str();
}

Corpus load_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open corpus file: " + path);
    return parse_corpus(in);
}

void save_corpus(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write corpus file: " + path);
    out << serialize(corpus);
}

}  // namespace poc
