#include "caddot/harness/audit.hpp"

#include <sstream>

namespace caddot::harness {

using namespace caddot::protocol;

namespace {

const ScheduleEntry* entry_at(const Schedule& schedule, const SimCalendar& cal, long sec) {
    long total_min = cal.epoch_time.minutes + sec / 60;
    auto day = static_cast<Weekday>(
        (static_cast<long>(cal.epoch_weekday) + total_min / 1440) % 7);
    int tod = static_cast<int>(total_min % 1440);
    for (const auto& e : schedule.entries) {
        if (e.days.count(day) > 0 && e.start.minutes <= tod && tod < e.end.minutes) return &e;
    }
    return nullptr;
}

long open_second(const SimCalendar& cal, long sec, const ScheduleEntry& e) {
    long total_min = cal.epoch_time.minutes + sec / 60;
    long midnight_s = (total_min / 1440) * 1440 * 60 - cal.epoch_time.minutes * 60;
    return midnight_s + static_cast<long>(e.start.minutes) * 60;
}

// Readings count as received when their batch is transmitted, so the walk
// accumulates samples into pending and credits them at batch time.
CadenceExpectation walk_schedule(const Schedule& schedule, int phen, const SimCalendar& cal,
                                 TimePoint from, std::chrono::seconds window) {
    CadenceExpectation out;
    long pending = 0;
    long first = from.ms / 1000 + 1;
    long last = (from.ms + window.count() * 1000) / 1000;
    const ScheduleEntry* prev = entry_at(schedule, cal, from.ms / 1000);
    for (long s = first; s <= last; ++s) {
        if (s * 1000 <= from.ms) continue;
        const auto* e = entry_at(schedule, cal, s);
        if (prev && prev != e && pending > 0) {
            out.batches++;
            out.readings += pending;
            pending = 0;
        }
        if (e) {
            long k = s - open_second(cal, s, *e);
            if (k > 0) {
                if (k % e->sampling_rate.count() == 0) pending += phen;
                if (k % e->comm_frequency.count() == 0 && pending > 0) {
                    out.batches++;
                    out.readings += pending;
                    pending = 0;
                }
            }
        }
        prev = e;
    }
    return out;
}

CadenceExpectation walk_interval(const SensingStrategy& strategy, int phen, TimePoint from,
                                 std::chrono::seconds window) {
    CadenceExpectation out;
    long pending = 0;
    for (long k = 1; k <= window.count(); ++k) {
        if (k % strategy.sampling_rate.count() == 0) pending += phen;
        if (k % strategy.comm_frequency.count() == 0 && pending > 0) {
            out.batches++;
            out.readings += pending;
            pending = 0;
        }
    }
    (void)from;
    return out;
}

}  // namespace

CadenceExpectation expected_cadence(const SensingStrategy& strategy, int phenomenon_count,
                                    const SimCalendar& cal, TimePoint from,
                                    std::chrono::seconds window) {
    switch (strategy.acquisition) {
        case Acquisition::stop:
        case Acquisition::pull:
            return {};
        case Acquisition::push_interval:
            return walk_interval(strategy, phenomenon_count, from, window);
        case Acquisition::push_schedule:
            if (!strategy.schedule) return {};
            return walk_schedule(*strategy.schedule, phenomenon_count, cal, from, window);
    }
    return {};
}

std::string AuditResult::describe() const {
    std::ostringstream out;
    out << sensor_id << " (" << transport << "): " << (pass ? "PASS" : "FAIL")
        << " readings " << actual_readings << "/" << expected_readings << " batches "
        << actual_batches << "/" << expected_batches;
    return out.str();
}

AuditResult run_cadence_audit(const std::string& sensor_id, const std::string& transport,
                              const SensingStrategy& strategy, int phenomenon_count,
                              const SimCalendar& cal, TimePoint direct_at,
                              std::chrono::seconds window,
                              const std::vector<TimePoint>& reading_arrivals,
                              const std::vector<TimePoint>& batch_arrivals) {
    AuditResult result;
    result.sensor_id = sensor_id;
    result.transport = transport;

    auto expected = expected_cadence(strategy, phenomenon_count, cal, direct_at, window);
    result.expected_readings = expected.readings;
    result.expected_batches = expected.batches;

    auto end = TimePoint{direct_at.ms + window.count() * 1000};
    for (const auto& r : reading_arrivals) {
        if (r > direct_at && r <= end) result.actual_readings++;
    }
    for (const auto& b : batch_arrivals) {
        if (b > direct_at && b <= end) result.actual_batches++;
    }
    result.pass = result.actual_readings == result.expected_readings &&
                  result.actual_batches == result.expected_batches;
    return result;
}

}  // namespace caddot::harness
