#pragma once

// Random generators for protocol values, shared by the unit and acceptance
// suites. Generated values satisfy the documented validity rules, so
// decode(encode(x)) == x is expected to hold exactly.

#include <random>
#include <string>

#include "caddot/protocol/command.hpp"
#include "caddot/protocol/message.hpp"
#include "caddot/protocol/schedule.hpp"

namespace caddot::testgen {

using namespace caddot::protocol;

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    int range(int lo, int hi) {  // inclusive
        return std::uniform_int_distribution<int>(lo, hi)(rng_);
    }

    std::chrono::seconds seconds(int lo = 1, int hi = 3600) {
        return std::chrono::seconds(range(lo, hi));
    }

    std::string ident(std::size_t min_len = 1, std::size_t max_len = 12) {
        static constexpr char alphabet[] =
            "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789-_.";
        auto len = static_cast<std::size_t>(range(static_cast<int>(min_len),
                                                  static_cast<int>(max_len)));
        std::string s;
        for (std::size_t i = 0; i < len; ++i) {
            s += alphabet[static_cast<std::size_t>(range(0, sizeof(alphabet) - 2))];
        }
        return s;
    }

    // Arbitrary bytes including the characters the wire must escape.
    std::string rough_text(std::size_t max_len = 16) {
        static constexpr char alphabet[] = "abcXYZ012 [%]=\n:;,";
        auto len = static_cast<std::size_t>(range(1, static_cast<int>(max_len)));
        std::string s;
        for (std::size_t i = 0; i < len; ++i) {
            s += alphabet[static_cast<std::size_t>(range(0, sizeof(alphabet) - 2))];
        }
        return s;
    }

    double milli_value() {  // exactly representable at three decimals
        return static_cast<double>(range(-200000, 200000)) / 1000.0;
    }

    SensorIdentity identity() {
        return {"S-" + ident(3, 6), "M-" + ident(2, 5), "MFR-" + ident(2, 5)};
    }

    FetchSettings fetch_settings() {
        return {ident(4, 10), "/" + ident(3, 10), ident(3, 8), ident(6, 12)};
    }

    NetworkSettings network_settings() {
        return {rough_text(10), rough_text(12), ident(4, 10), range(1, 65535), ident(8, 16)};
    }

    Schedule schedule(int max_entries = 3) {
        // Non-overlapping by construction: slice the day into disjoint windows.
        Schedule s;
        int n = range(0, max_entries);
        int cursor = 0;
        for (int i = 0; i < n; ++i) {
            int start = cursor + range(0, 120);
            int len = range(1, 300);
            int end = std::min(start + len, 1439);
            if (start >= 1439 || start >= end) break;
            cursor = end;
            ScheduleEntry e;
            int day_lo = range(0, 6);
            int day_hi = range(day_lo, 6);
            for (int d = day_lo; d <= day_hi; ++d) e.days.insert(static_cast<Weekday>(d));
            e.start = {start};
            e.end = {end};
            e.sampling_rate = seconds(1, 600);
            e.comm_frequency = seconds(1, 600);
            s.entries.push_back(std::move(e));
        }
        return s;
    }

    Schedule nonempty_schedule() {
        for (;;) {
            auto s = schedule();
            if (!s.empty()) return s;
        }
    }

    Command command() {
        switch (range(0, 9)) {
            case 0: return Who{};
            case 1: return Pull{};
            case 2: return TemporaryPush{seconds(), seconds(), seconds()};
            case 3: return SchedulePush{};
            case 4: return SetSamplingRate{seconds()};
            case 5: return SetCommFrequency{seconds()};
            case 6: return SetSchedule{fetch_settings()};
            case 7: return SetNetwork{network_settings()};
            case 8: return Stop{};
            default: return GetProfile{};
        }
    }

    SensingStrategy strategy() {
        SensingStrategy s;
        s.sampling_rate = seconds(1, 600);
        s.comm_frequency = seconds(1, 600);
        switch (range(0, 3)) {
            case 0: s.acquisition = Acquisition::pull; break;
            case 1: s.acquisition = Acquisition::push_interval; break;
            case 2: s.acquisition = Acquisition::push_schedule; break;
            default: s.acquisition = Acquisition::stop; break;
        }
        if (s.acquisition == Acquisition::push_schedule) s.schedule = nonempty_schedule();
        return s;
    }

    SensorProfile profile() {
        SensorProfile p;
        p.identity = identity();
        int n = range(1, 3);
        for (int i = 0; i < n; ++i) {
            p.phenomena.push_back({"phen" + std::to_string(i) + ident(1, 4), ident(1, 4)});
        }
        p.supported_modes = {Acquisition::pull, Acquisition::push_interval,
                             Acquisition::push_schedule};
        p.strategy = strategy();
        return p;
    }

    Message message() {
        switch (range(0, 4)) {
            case 0: {
                Identity m{identity(), {}};
                int extras = range(0, 3);
                for (int i = 0; i < extras; ++i) {
                    m.extras.emplace_back("x" + std::to_string(i), rough_text());
                }
                return m;
            }
            case 1: return ProfileMsg{profile()};
            case 2:
                return Reading{"S-" + ident(3, 6), "phen" + ident(1, 5), milli_value(),
                               rough_text(6), TimePoint{static_cast<std::int64_t>(range(0, 1 << 30))}};
            case 3: return Ack{static_cast<CommandTag>(range(0, 9))};
            default:
                return Err{static_cast<ErrCode>(range(0, 15)), rough_text()};
        }
    }

    std::mt19937_64& rng() { return rng_; }

private:
    std::mt19937_64 rng_;
};

}  // namespace caddot::testgen
