#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "caddot/clock.hpp"

namespace caddot::protocol {

enum class Weekday : int { mon = 0, tue, wed, thu, fri, sat, sun };

std::string_view to_string(Weekday d);
std::optional<Weekday> weekday_from_string(std::string_view s);

// Minutes since midnight, 0..1439.
struct TimeOfDay {
    int minutes = 0;

    friend auto operator<=>(const TimeOfDay&, const TimeOfDay&) = default;
};

std::string to_string(TimeOfDay t);

struct ScheduleEntry {
    std::set<Weekday> days;
    TimeOfDay start;
    TimeOfDay end;  // exclusive
    std::chrono::seconds sampling_rate{0};
    std::chrono::seconds comm_frequency{0};

    bool operator==(const ScheduleEntry&) const = default;
};

// Calendar windows gating sensing and transmission. An empty schedule means
// the sensor idles.
struct Schedule {
    std::vector<ScheduleEntry> entries;

    bool operator==(const Schedule&) const = default;
    bool empty() const { return entries.empty(); }
};

enum class ScheduleErrc {
    syntax,
    overlap,
    bad_time,
};

struct ScheduleError {
    ScheduleErrc code;
    int line = 0;
    std::string detail;

    bool operator==(const ScheduleError&) const = default;
};

std::string_view to_string(ScheduleErrc code);

// ── Schedule file format ─────────────────────────────────────────────────────
//
// One entry per line:
//
//   DAYS HH:MM-HH:MM rate=<seconds> freq=<seconds>
//
// DAYS is a comma list of day names or ranges (MON-FRI, MON,WED, SAT).
// Blank lines and lines starting with '#' are ignored. Entries for the same
// day must not overlap.

std::variant<Schedule, ScheduleError> parse_schedule(std::string_view text);
std::string render_schedule(const Schedule& schedule);

// ── Calendar mapping ─────────────────────────────────────────────────────────
//
// Anchors TimePoint zero to a weekday and time of day so schedule windows can
// be evaluated against simulated time.

struct SimCalendar {
    Weekday epoch_weekday = Weekday::mon;
    TimeOfDay epoch_time{0};

    Weekday weekday_at(TimePoint t) const;
    TimeOfDay time_of_day_at(TimePoint t) const;
};

// The entry whose window contains t, if any.
const ScheduleEntry* active_entry(const Schedule& schedule, const SimCalendar& cal, TimePoint t);

// Start of the current-or-next window opening at or after t, if any entry
// exists. Used to skip idle gaps without polling.
std::optional<TimePoint> next_window_start(const Schedule& schedule, const SimCalendar& cal,
                                           TimePoint t);

// End of the window containing t (absolute time). Precondition: active.
TimePoint window_end(const ScheduleEntry& entry, const SimCalendar& cal, TimePoint t);

}  // namespace caddot::protocol
