#pragma once

// Brute-force clock-walk oracle for sensing cadence. Walks second by second
// and counts samples/batches directly from the documented semantics; kept
// independent of SensingEngine's event arithmetic on purpose.

#include <vector>

#include "caddot/protocol/schedule.hpp"

namespace caddot::testgen {

struct CadenceCount {
    long readings = 0;
    long batches = 0;
    std::vector<long> batch_sizes;

    bool operator==(const CadenceCount&) const = default;
};

// Interval push anchored at second 0 with inclusive expiry at duration_s.
inline CadenceCount oracle_interval(int phen, long rate_s, long freq_s, long duration_s) {
    CadenceCount out;
    long pending = 0;
    for (long s = 1; s <= duration_s; ++s) {
        if (s % rate_s == 0) {
            pending += phen;
            out.readings += phen;
        }
        if (s % freq_s == 0 && pending > 0) {
            out.batches++;
            out.batch_sizes.push_back(pending);
            pending = 0;
        }
    }
    if (pending > 0) {
        out.batches++;
        out.batch_sizes.push_back(pending);
    }
    return out;
}

// Schedule-gated push, armed at arm_s, observed for window_s seconds. Window
// membership is recomputed per second from the raw entries.
inline CadenceCount oracle_schedule(int phen, const protocol::Schedule& schedule,
                                    const protocol::SimCalendar& cal, long arm_s,
                                    long window_s) {
    CadenceCount out;
    long pending = 0;

    auto entry_at = [&](long sec) -> const protocol::ScheduleEntry* {
        long total_min = cal.epoch_time.minutes + sec / 60;
        auto day = static_cast<protocol::Weekday>(
            (static_cast<long>(cal.epoch_weekday) + total_min / 1440) % 7);
        int tod = static_cast<int>(total_min % 1440);
        for (const auto& e : schedule.entries) {
            if (e.days.count(day) > 0 && e.start.minutes <= tod && tod < e.end.minutes) {
                return &e;
            }
        }
        return nullptr;
    };
    auto open_second = [&](long sec, const protocol::ScheduleEntry& e) {
        long total_min = cal.epoch_time.minutes + sec / 60;
        long midnight_s = (total_min / 1440) * 1440 * 60 - cal.epoch_time.minutes * 60;
        return midnight_s + static_cast<long>(e.start.minutes) * 60;
    };

    const protocol::ScheduleEntry* prev = entry_at(arm_s);
    for (long s = arm_s + 1; s <= arm_s + window_s; ++s) {
        const auto* e = entry_at(s);
        if (prev && prev != e && pending > 0) {
            // Previous window closed this second (next one may open back to
            // back): flush.
            out.batches++;
            out.batch_sizes.push_back(pending);
            pending = 0;
        }
        if (e) {
            long k = s - open_second(s, *e);
            if (k > 0) {
                if (k % e->sampling_rate.count() == 0) {
                    pending += phen;
                    out.readings += phen;
                }
                if (k % e->comm_frequency.count() == 0 && pending > 0) {
                    out.batches++;
                    out.batch_sizes.push_back(pending);
                    pending = 0;
                }
            }
        }
        prev = e;
    }
    return out;
}

}  // namespace caddot::testgen
