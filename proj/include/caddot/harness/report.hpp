#pragma once

#include <map>
#include <string>
#include <vector>

#include "caddot/configurator/trace.hpp"
#include "caddot/harness/audit.hpp"

namespace caddot::harness {

struct StepStat {
    int samples = 0;
    double mean_s = 0.0;
    double min_s = 0.0;
    double max_s = 0.0;
};

struct TransportOutcome {
    int configured = 0;
    int failed = 0;
};

// Aggregated results of one experiment across its transports.
struct Report {
    std::string experiment;
    bool deterministic = false;
    std::vector<std::string> transports;                      // run order
    std::map<std::string, std::array<StepStat, 10>> stats;    // per transport
    std::map<std::string, TransportOutcome> outcomes;
    std::vector<configurator::SessionTrace> traces;           // sorted for output
    std::vector<AuditResult> audits;
    long sink_rejects = 0;
    bool auth_clean = true;  // no rejected readings anywhere

    StepStat stat(const std::string& transport, configurator::Step step) const;
    int total_configured() const;
    int total_failed() const;
    bool all_audits_pass() const;
};

// Builds stats from traces ("ok" spans only); traces are sorted by
// (transport, sensor id) so output is stable.
Report build_report(std::string experiment, bool deterministic,
                    std::vector<std::string> transports,
                    std::vector<configurator::SessionTrace> traces,
                    std::vector<AuditResult> audits, long sink_rejects);

// Writers. Deterministic mode zeroes the start/end timestamp fields in
// traces.csv; durations are kept.
std::string traces_csv(const Report& report);
std::string report_csv(const Report& report);
std::string table_text(const Report& report);
std::string report_json(const Report& report);

void write_report_files(const Report& report, const std::string& out_dir);

}  // namespace caddot::harness
