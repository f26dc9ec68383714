#pragma once

#include <variant>

#include "caddot/harness/experiment.hpp"
#include "caddot/harness/report.hpp"

namespace caddot::harness {

struct RunOptions {
    std::string out_dir;  // run artifacts; empty disables files
    std::optional<bool> emulate_latency;
    std::optional<bool> deterministic;
    std::optional<std::vector<transport::TransportKind>> transports;
    std::optional<std::uint64_t> seed;
};

struct RunError {
    std::string detail;
    int exit_code = 3;  // setup error
};

// Runs the experiment once per transport on a fresh simulated world each
// time, aggregates the traces and audits, and (when out_dir is set) writes
// traces.csv, report.csv, table.txt, report.json plus the registry's
// append-only logs.
std::variant<Report, RunError> run_experiment(Experiment experiment, const RunOptions& opts);

// Re-checks the stored audits of a finished run against its readings log;
// detects tampered or missing data. Returns human-readable lines, one per
// audited sensor, and sets ok=false if any re-check fails.
struct OfflineAudit {
    bool ok = true;
    std::vector<std::string> lines;
};
OfflineAudit audit_run_dir(const std::string& out_dir, const std::string& sensor_filter = {});

}  // namespace caddot::harness
