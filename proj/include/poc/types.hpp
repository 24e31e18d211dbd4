#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace poc {

// ---------------------------------------------------------------------------
// Error taxonomy. The CLI maps these onto exit codes (data errors -> 2,
// everything else unexpected -> 3).
// ---------------------------------------------------------------------------

class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& message, std::size_t line = 0)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + message : message),
          line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class StateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Calls and utterances
// ---------------------------------------------------------------------------

// Exactly two sides per call; multiparty calls are out of scope.
enum class CallSide : std::uint8_t { Agent, Customer };

enum class CallDirection : std::uint8_t { Inbound, Outbound, Unknown };

enum class CallDomain : std::uint8_t { Support, Sales, General, Unknown };

CallSide opposite(CallSide side);

const char* to_string(CallSide side);
const char* to_string(CallDirection direction);
const char* to_string(CallDomain domain);

CallSide parse_call_side(const std::string& text);
CallDirection parse_call_direction(const std::string& text);
CallDomain parse_call_domain(const std::string& text);

// One transcribed speech segment. `token_count` counts word tokens only
// (punctuation-only tokens excluded); see tokenize.hpp.
struct Utterance {
    std::string call_id;
    std::uint32_t index = 0;          // 0-based arrival order within the call
    CallSide side = CallSide::Customer;
    double start_time_s = 0.0;        // seconds from call start
    std::string text;
    std::uint32_t token_count = 0;    // derived from text
};

// Builds an utterance with token_count derived from the text.
Utterance make_utterance(std::string call_id, std::uint32_t index, CallSide side,
                         double start_time_s, std::string text);

// Pattern taxonomy shared across the rule engine, scoring, and bootstrap.
// The semantics of each tag (contextual constraints included) are owned by
// the pattern engine; this is just the shared vocabulary.
enum class PatternTag : std::uint8_t {
    CallPurposePhrase,
    DesirePhrase,
    QuestionResponse,
    Greeting,
    ProblemPhrase,
    Update,
    Continuation,
    QuestionPrompt,
    NegativeFilter,
};

const char* to_string(PatternTag tag);
PatternTag parse_pattern_tag(const std::string& text);

// Probabilities over {purpose, question, negative}.
struct ScoreTriple {
    double p_purpose = 0.0;
    double p_question = 0.0;
    double p_negative = 1.0;

    static constexpr double kSimplexTolerance = 1e-6;

    bool on_simplex() const noexcept;
    void validate() const;  // throws ValidationError when off the simplex
};

// The currently-best purpose-of-call for one call. At most one per call at
// any time; replaced only by a strictly higher combined score.
struct PurposeDecision {
    std::string call_id;
    std::uint32_t utterance_index = 0;
    double combined_score = 0.0;
    std::set<PatternTag> tags;
    std::string original_text;
    std::string simplified_text;
    std::uint32_t decided_at_utterance_index = 0;
};

struct Call {
    std::string call_id;
    CallDirection direction = CallDirection::Unknown;
    CallDomain domain = CallDomain::Unknown;
    double duration_s = 0.0;
    std::vector<Utterance> utterances;  // ordered by index

    // The side that placed the call. Unknown direction defaults to the
    // customer, the more common case for contact-center traffic.
    CallSide initiator_side() const noexcept {
        return direction == CallDirection::Outbound ? CallSide::Agent : CallSide::Customer;
    }
};

}  // namespace poc
