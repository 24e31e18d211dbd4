#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "poc/types.hpp"

namespace poc {

// Per-call gold annotation for generated/annotated corpora: the correct
// purpose utterance index, or none when the call has no explicit purpose.
struct GoldAnnotation {
    std::string call_id;
    std::optional<std::uint32_t> purpose_index;
    std::optional<PatternTag> pattern;
};

struct Corpus {
    std::vector<Call> calls;
    std::map<std::string, GoldAnnotation> gold;

    const Call* find_call(const std::string& call_id) const;
};

// Wire records, one JSON object per line (UTF-8). Unknown fields are
// ignored; unknown types are rejected.
//   {"type":"call_meta","call_id":...,"direction":...,"domain":...,"duration_s":...}
//   {"type":"utterance","call_id":...,"index":...,"side":...,"start_time_s":...,"text":...}
//   {"type":"gold","call_id":...,"purpose_index":...|null,"pattern":...}
//   {"type":"call_end","call_id":...}

nlohmann::json utterance_event(const Utterance& utterance);
nlohmann::json call_meta_event(const Call& call);
nlohmann::json call_end_event(const std::string& call_id);
nlohmann::json gold_event(const GoldAnnotation& gold);

Utterance parse_utterance_event(const nlohmann::json& record);

// Parses a stream holding exactly one call; utterance events arriving out of
// index order are re-sorted, duplicate indices are rejected, and the result
// satisfies the utterance invariants (non-negative times, non-decreasing with
// index, at least one word token per utterance).
Call parse_transcript(std::istream& in);

// Parses a multi-call stream with optional gold annotation records.
Corpus parse_corpus(std::istream& in);

std::string serialize(const Call& call);
std::string serialize(const Corpus& corpus);

Corpus load_corpus(const std::string& path);
void save_corpus(const Corpus& corpus, const std::string& path);

}  // namespace poc
