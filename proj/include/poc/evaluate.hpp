#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "poc/transcript.hpp"
#include "poc/types.hpp"

namespace poc {

// Calls shorter than this are excluded from hit-rate accounting; a caller who
// hung up before the conversation started cannot contain a purpose.
constexpr double kHitRateMinDurationS = 30.0;

struct DomainMetrics {
    CallDomain domain = CallDomain::Unknown;
    double precision = 0.0;  // correct decisions / decisions made
    double hit_rate = 0.0;   // eligible calls with a decision / eligible calls
    double f1 = 0.0;         // harmonic mean of precision and hit rate
    std::size_t eligible_calls = 0;
    std::size_t calls = 0;
    std::size_t decisions = 0;
    std::size_t correct = 0;
    std::size_t hits = 0;                // eligible calls with a decision
    bool degenerate_precision = false;   // zero decisions; precision reported as 0
};

struct EvalReport {
    std::vector<DomainMetrics> domains;  // one row per domain present in gold
    DomainMetrics overall;               // arithmetic mean of the domain rows
};

// call_id -> selected utterance index (nullopt = explicit miss)
using DecisionMap = std::map<std::string, std::optional<std::uint32_t>>;

// Scores decisions against a gold corpus. A decision is correct iff it
// selects the gold purpose index for its call. Every decided call must be
// present in the gold corpus.
EvalReport evaluate(const DecisionMap& decisions, const Corpus& gold);

double harmonic_mean(double a, double b);

// Table-shaped rendering: one row per domain plus the overall row.
// "text" is aligned for humans, "tsv" is machine-readable fractions.
std::string render_table(const EvalReport& report, const std::string& format = "text");

// Several models side by side (domain x model grid).
std::string render_comparison(const std::vector<std::pair<std::string, EvalReport>>& reports,
                              const std::string& format = "text");

}  // namespace poc
