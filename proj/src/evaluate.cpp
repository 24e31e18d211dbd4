#include "poc/evaluate.hpp"

#include <algorithm>
#include <array>
#include <iomanip>
#include <set>
#include <sstream>

namespace poc {

double harmonic_mean(double a, double b) {
    if (a + b <= 0.0) return 0.0;
    return 2.0 * a * b / (a + b);
}

EvalReport evaluate(const DecisionMap& decisions, const Corpus& gold) {
    std::set<std::string> known_calls;
    for (const auto& call : gold.calls) known_calls.insert(call.call_id);
    for (const auto& [call_id, index] : decisions) {
        (void)index;
        if (!known_calls.count(call_id)) {
            throw ValidationError("decision for call '" + call_id +
                                  "' has no gold annotation (call not in corpus)");
        }
    }

    std::map<CallDomain, DomainMetrics> by_domain;
    for (const auto& call : gold.calls) {
        DomainMetrics& m = by_domain[call.domain];
        m.domain = call.domain;
        ++m.calls;
        const bool eligible = call.duration_s >= kHitRateMinDurationS;
        if (eligible) ++m.eligible_calls;

        std::optional<std::uint32_t> decided;
        auto it = decisions.find(call.call_id);
        if (it != decisions.end() && it->second) decided = it->second;

        if (decided) {
            ++m.decisions;
            if (eligible) ++m.hits;
            auto gold_it = gold.gold.find(call.call_id);
            if (gold_it != gold.gold.end() && gold_it->second.purpose_index &&
                *gold_it->second.purpose_index == *decided) {
                ++m.correct;
            }
        }
    }

    EvalReport report;
    for (auto& [domain, m] : by_domain) {
        (void)domain;
        if (m.decisions > 0) {
            m.precision = static_cast<double>(m.correct) / static_cast<double>(m.decisions);
        } else {
            m.precision = 0.0;
            m.degenerate_precision = true;
        }
        m.hit_rate = m.eligible_calls > 0
                         ? static_cast<double>(m.hits) / static_cast<double>(m.eligible_calls)
                         : 0.0;
        m.f1 = harmonic_mean(m.precision, m.hit_rate);
        report.domains.push_back(m);
    }

    if (report.domains.empty()) {
        throw ValidationError("gold corpus holds no calls");
    }

    DomainMetrics& overall = report.overall;
    overall.domain = CallDomain::Unknown;
    for (const auto& m : report.domains) {
        overall.precision += m.precision;
        overall.hit_rate += m.hit_rate;
        overall.f1 += m.f1;
        overall.eligible_calls += m.eligible_calls;
        overall.calls += m.calls;
        overall.decisions += m.decisions;
        overall.correct += m.correct;
        overall.hits += m.hits;
        overall.degenerate_precision |= m.degenerate_precision;
    }
    const double n = static_cast<double>(report.domains.size());
    overall.precision /= n;
    overall.hit_rate /= n;
    overall.f1 /= n;
    return report;
}

namespace {

void append_row_text(std::ostringstream& out, const std::string& domain,
                     const std::string& model, const DomainMetrics& m) {
    out << std::left << std::setw(10) << domain << std::setw(10) << model << std::right
        << std::fixed << std::setprecision(1) << std::setw(7) << m.precision * 100.0
        << std::setw(7) << m.hit_rate * 100.0 << std::setw(7) << m.f1 * 100.0 << std::setw(8)
        << m.calls << std::setw(7) << m.decisions << std::setw(9) << m.correct
        << (m.degenerate_precision ? "  (no decisions)" : "") << '\n';
}

void append_row_tsv(std::ostringstream& out, const std::string& domain, const std::string& model,
                    const DomainMetrics& m) {
    out << domain << '\t' << model << '\t' << std::setprecision(10) << m.precision << '\t'
        << m.hit_rate << '\t' << m.f1 << '\t' << m.calls << '\t' << m.eligible_calls << '\t'
        << m.decisions << '\t' << m.correct << '\t' << (m.degenerate_precision ? 1 : 0) << '\n';
}

}  // namespace

std::string render_comparison(const std::vector<std::pair<std::string, EvalReport>>& reports,
                              const std::string& format) {
    if (reports.empty()) {
        throw ValidationError("nothing to render: no evaluation reports");
    }
    for (const auto& [name, report] : reports) {
        (void)name;
        if (report.domains.empty()) {
            throw ValidationError("nothing to render: empty evaluation report");
        }
    }

    std::ostringstream out;
    const bool tsv = format == "tsv";
    if (tsv) {
        out << "domain\tmodel\tprecision\thit_rate\tf1\tcalls\teligible\tdecisions\tcorrect\t"
               "degenerate\n";
    } else {
        out << std::left << std::setw(10) << "Domain" << std::setw(10) << "Model" << std::right
            << std::setw(7) << "P" << std::setw(7) << "HR" << std::setw(7) << "F1" << std::setw(8)
            << "Calls" << std::setw(7) << "Dec" << std::setw(9) << "Correct" << '\n';
    }

    // Domain-major ordering, overall row last, as in the usual grid.
    std::vector<CallDomain> domains;
    for (const auto& [name, report] : reports) {
        (void)name;
        for (const auto& m : report.domains) {
            if (std::find(domains.begin(), domains.end(), m.domain) == domains.end()) {
                domains.push_back(m.domain);
            }
        }
    }
    for (CallDomain domain : domains) {
        for (const auto& [name, report] : reports) {
            auto it = std::find_if(report.domains.begin(), report.domains.end(),
                                   [&](const DomainMetrics& m) { return m.domain == domain; });
            if (it == report.domains.end()) continue;
            if (tsv) {
                append_row_tsv(out, to_string(domain), name, *it);
            } else {
                append_row_text(out, to_string(domain), name, *it);
            }
        }
    }
    for (const auto& [name, report] : reports) {
        if (tsv) {
            append_row_tsv(out, "avg", name, report.overall);
        } else {
            append_row_text(out, "Avg", name, report.overall);
        }
    }
    return out.str();
}

std::string render_table(const EvalReport& report, const std::string& format) {
    return render_comparison({{"run", report}}, format);
}

}  // namespace poc
