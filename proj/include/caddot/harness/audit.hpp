#pragma once

#include <string>
#include <vector>

#include "caddot/protocol/message.hpp"
#include "caddot/protocol/types.hpp"

namespace caddot::harness {

// Expected sample/batch counts for a strategy active from `from` (exclusive)
// through `from + window` (inclusive), computed by a brute-force one-second
// clock walk. This is the audit's reference, deliberately independent of the
// sensor engine's event arithmetic.
struct CadenceExpectation {
    long readings = 0;
    long batches = 0;
};

CadenceExpectation expected_cadence(const protocol::SensingStrategy& strategy,
                                    int phenomenon_count, const protocol::SimCalendar& cal,
                                    TimePoint from, std::chrono::seconds window);

struct AuditResult {
    std::string sensor_id;
    std::string transport;
    long expected_readings = 0;
    long actual_readings = 0;
    long expected_batches = 0;
    long actual_batches = 0;
    bool pass = false;

    // Audit inputs, kept so the stored run can be re-audited offline.
    std::string strategy_line;  // [STR] wire form
    int phenomena = 1;
    std::int64_t direct_at_ms = 0;
    std::int64_t window_s = 0;
    int epoch_weekday = 0;
    int epoch_minute = 0;

    std::string describe() const;
};

// Compares sink-received counts against the walk. Arrival times are when the
// sink accepted each reading / batch trailer.
AuditResult run_cadence_audit(const std::string& sensor_id, const std::string& transport,
                              const protocol::SensingStrategy& strategy, int phenomenon_count,
                              const protocol::SimCalendar& cal, TimePoint direct_at,
                              std::chrono::seconds window,
                              const std::vector<TimePoint>& reading_arrivals,
                              const std::vector<TimePoint>& batch_arrivals);

}  // namespace caddot::harness
