#include "caddot/protocol/schedule.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <sstream>

namespace caddot::protocol {

namespace {

constexpr std::array<std::string_view, 7> kDayNames = {"MON", "TUE", "WED", "THU",
                                                       "FRI", "SAT", "SUN"};

constexpr std::int64_t kMsPerMinute = 60'000;
constexpr std::int64_t kMinutesPerDay = 1440;

std::optional<int> parse_int(std::string_view s) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::optional<TimeOfDay> parse_time(std::string_view s) {
    auto colon = s.find(':');
    if (colon == std::string_view::npos) return std::nullopt;
    auto h = parse_int(s.substr(0, colon));
    auto m = parse_int(s.substr(colon + 1));
    if (!h || !m || s.substr(0, colon).size() != 2 || s.substr(colon + 1).size() != 2) {
        return std::nullopt;
    }
    if (*h < 0 || *h > 23 || *m < 0 || *m > 59) return std::nullopt;
    return TimeOfDay{*h * 60 + *m};
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        auto next = s.find(sep, pos);
        if (next == std::string_view::npos) {
            out.push_back(s.substr(pos));
            break;
        }
        out.push_back(s.substr(pos, next - pos));
        pos = next + 1;
    }
    return out;
}

std::optional<std::set<Weekday>> parse_days(std::string_view token) {
    std::set<Weekday> days;
    for (auto part : split(token, ',')) {
        auto dash = part.find('-');
        if (dash == std::string_view::npos) {
            auto d = weekday_from_string(part);
            if (!d) return std::nullopt;
            days.insert(*d);
        } else {
            auto a = weekday_from_string(part.substr(0, dash));
            auto b = weekday_from_string(part.substr(dash + 1));
            if (!a || !b || static_cast<int>(*a) > static_cast<int>(*b)) return std::nullopt;
            for (int d = static_cast<int>(*a); d <= static_cast<int>(*b); ++d) {
                days.insert(static_cast<Weekday>(d));
            }
        }
    }
    if (days.empty()) return std::nullopt;
    return days;
}

std::optional<int> parse_kv_int(std::string_view token, std::string_view key) {
    if (token.size() <= key.size() + 1) return std::nullopt;
    if (token.substr(0, key.size()) != key || token[key.size()] != '=') return std::nullopt;
    return parse_int(token.substr(key.size() + 1));
}

std::string render_days(const std::set<Weekday>& days) {
    // Collapse maximal consecutive runs into ranges.
    std::string out;
    auto it = days.begin();
    while (it != days.end()) {
        int first = static_cast<int>(*it);
        int last = first;
        auto run = std::next(it);
        while (run != days.end() && static_cast<int>(*run) == last + 1) {
            last = static_cast<int>(*run);
            ++run;
        }
        if (!out.empty()) out += ',';
        out += kDayNames[static_cast<std::size_t>(first)];
        if (last > first) {
            out += '-';
            out += kDayNames[static_cast<std::size_t>(last)];
        }
        it = run;
    }
    return out;
}

}  // namespace

std::string_view to_string(Weekday d) {
    return kDayNames[static_cast<std::size_t>(d)];
}

std::optional<Weekday> weekday_from_string(std::string_view s) {
    for (std::size_t i = 0; i < kDayNames.size(); ++i) {
        if (s == kDayNames[i]) return static_cast<Weekday>(i);
    }
    return std::nullopt;
}

std::string to_string(TimeOfDay t) {
    char buf[6];
    std::snprintf(buf, sizeof(buf), "%02d:%02d", t.minutes / 60, t.minutes % 60);
    return buf;
}

std::string_view to_string(ScheduleErrc code) {
    switch (code) {
        case ScheduleErrc::syntax: return "SyntaxError";
        case ScheduleErrc::overlap: return "OverlapError";
        case ScheduleErrc::bad_time: return "BadTime";
    }
    return "?";
}

std::variant<Schedule, ScheduleError> parse_schedule(std::string_view text) {
    Schedule schedule;
    int line_no = 0;
    for (auto raw_line : split(text, '\n')) {
        ++line_no;
        while (!raw_line.empty() && (raw_line.back() == '\r' || raw_line.back() == ' ')) {
            raw_line.remove_suffix(1);
        }
        while (!raw_line.empty() && raw_line.front() == ' ') raw_line.remove_prefix(1);
        if (raw_line.empty() || raw_line.front() == '#') continue;

        std::vector<std::string_view> fields;
        for (auto f : split(raw_line, ' ')) {
            if (!f.empty()) fields.push_back(f);
        }
        if (fields.size() != 4) {
            return ScheduleError{ScheduleErrc::syntax, line_no, "expected 4 fields"};
        }

        auto days = parse_days(fields[0]);
        if (!days) {
            return ScheduleError{ScheduleErrc::syntax, line_no, "bad day list"};
        }

        auto dash = fields[1].find('-');
        if (dash == std::string_view::npos) {
            return ScheduleError{ScheduleErrc::syntax, line_no, "expected HH:MM-HH:MM"};
        }
        auto start = parse_time(fields[1].substr(0, dash));
        auto end = parse_time(fields[1].substr(dash + 1));
        if (!start || !end) {
            return ScheduleError{ScheduleErrc::bad_time, line_no, "bad time of day"};
        }
        if (!(*start < *end)) {
            return ScheduleError{ScheduleErrc::bad_time, line_no, "start must precede end"};
        }

        auto rate = parse_kv_int(fields[2], "rate");
        auto freq = parse_kv_int(fields[3], "freq");
        if (!rate || !freq) {
            return ScheduleError{ScheduleErrc::syntax, line_no, "expected rate=<s> freq=<s>"};
        }
        if (*rate <= 0 || *freq <= 0) {
            return ScheduleError{ScheduleErrc::syntax, line_no, "rates must be positive"};
        }

        ScheduleEntry entry{*days, *start, *end, std::chrono::seconds(*rate),
                            std::chrono::seconds(*freq)};

        for (const auto& prev : schedule.entries) {
            bool share_day = std::any_of(entry.days.begin(), entry.days.end(), [&](Weekday d) {
                return prev.days.count(d) > 0;
            });
            if (share_day && entry.start < prev.end && prev.start < entry.end) {
                return ScheduleError{ScheduleErrc::overlap, line_no,
                                     "window overlaps an earlier entry"};
            }
        }
        schedule.entries.push_back(std::move(entry));
    }
    return schedule;
}

std::string render_schedule(const Schedule& schedule) {
    std::ostringstream out;
    for (const auto& e : schedule.entries) {
        out << render_days(e.days) << ' ' << to_string(e.start) << '-' << to_string(e.end)
            << " rate=" << e.sampling_rate.count() << " freq=" << e.comm_frequency.count()
            << '\n';
    }
    return out.str();
}

Weekday SimCalendar::weekday_at(TimePoint t) const {
    auto total_min = static_cast<std::int64_t>(epoch_time.minutes) + t.ms / kMsPerMinute;
    auto day = (static_cast<std::int64_t>(epoch_weekday) + total_min / kMinutesPerDay) % 7;
    return static_cast<Weekday>(day);
}

TimeOfDay SimCalendar::time_of_day_at(TimePoint t) const {
    auto total_min = static_cast<std::int64_t>(epoch_time.minutes) + t.ms / kMsPerMinute;
    return TimeOfDay{static_cast<int>(total_min % kMinutesPerDay)};
}

const ScheduleEntry* active_entry(const Schedule& schedule, const SimCalendar& cal,
                                  TimePoint t) {
    auto day = cal.weekday_at(t);
    auto tod = cal.time_of_day_at(t);
    for (const auto& e : schedule.entries) {
        if (e.days.count(day) > 0 && e.start <= tod && tod < e.end) return &e;
    }
    return nullptr;
}

std::optional<TimePoint> next_window_start(const Schedule& schedule, const SimCalendar& cal,
                                           TimePoint t) {
    if (schedule.empty()) return std::nullopt;
    constexpr std::int64_t kMsPerDay = kMinutesPerDay * kMsPerMinute;
    auto abs_ms = t.ms + static_cast<std::int64_t>(cal.epoch_time.minutes) * kMsPerMinute;
    auto midnight_ms = (abs_ms / kMsPerDay) * kMsPerDay -
                       static_cast<std::int64_t>(cal.epoch_time.minutes) * kMsPerMinute;
    // Scan day by day, at most a week ahead.
    for (int offset = 0; offset <= 7; ++offset) {
        std::int64_t base = midnight_ms + offset * kMsPerDay;
        std::optional<std::int64_t> best;
        for (const auto& e : schedule.entries) {
            std::int64_t open = base + static_cast<std::int64_t>(e.start.minutes) * kMsPerMinute;
            if (open < t.ms) continue;
            if (e.days.count(cal.weekday_at({open})) == 0) continue;
            if (!best || open < *best) best = open;
        }
        if (best) return TimePoint{*best};
    }
    return std::nullopt;
}

TimePoint window_end(const ScheduleEntry& entry, const SimCalendar& cal, TimePoint t) {
    auto tod = cal.time_of_day_at(t);
    auto remaining_min = static_cast<std::int64_t>(entry.end.minutes - tod.minutes);
    return {t.ms - (t.ms % kMsPerMinute) + remaining_min * kMsPerMinute};
}

}  // namespace caddot::protocol
