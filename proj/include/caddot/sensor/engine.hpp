#pragma once

#include <optional>
#include <random>
#include <vector>

#include "caddot/clock.hpp"
#include "caddot/protocol/message.hpp"
#include "caddot/protocol/schedule.hpp"
#include "caddot/sensor/fleet.hpp"

namespace caddot::sensor {

// Deterministic value source: a seeded centi-precision random walk.
class ValueWalk {
public:
    explicit ValueWalk(std::uint64_t seed, double base = 20.0)
        : rng_(seed), centi_(static_cast<std::int64_t>(base * 100)) {}

    double next() {
        std::uniform_int_distribution<int> step(-50, 50);
        centi_ += step(rng_);
        return static_cast<double>(centi_) / 100.0;
    }

private:
    std::mt19937_64 rng_;
    std::int64_t centi_;
};

// ── SensingEngine ────────────────────────────────────────────────────────────
//
// Pure cadence arithmetic for interval and schedule-gated pushing, stepped by
// the caller's clock. Semantics (mirrored by the test oracle):
//
//   interval, anchored at t0 with rate r, frequency f, inclusive expiry e:
//     one reading per phenomenon at t0+k*r (k>=1, t<=e); pending readings
//     transmitted at t0+k*f (k>=1, t<=e); residue flushed at e.
//
//   schedule: per window [open, close) the same, anchored at `open` with
//     strict t<close, a flush at close, and no samples before the engine was
//     armed.

class SensingEngine {
public:
    SensingEngine(const SensorSpec& spec, protocol::SimCalendar cal);

    void arm_interval(TimePoint t0, std::chrono::seconds rate, std::chrono::seconds freq,
                      std::optional<TimePoint> expiry);
    void arm_schedule(TimePoint t0, protocol::Schedule schedule);
    void disarm();

    bool armed() const { return mode_ != Mode::idle; }
    bool expired() const { return expired_; }

    // Earliest instant strictly after the internal cursor at which the engine
    // has work; nullopt when idle.
    std::optional<TimePoint> next_event() const;

    // Processes everything due at instants <= t; returns the batches due for
    // transmission, oldest first.
    std::vector<std::vector<protocol::Reading>> advance_to(TimePoint t);

private:
    enum class Mode { idle, interval, schedule };

    struct Window {
        TimePoint open;
        TimePoint close;
        std::chrono::seconds rate{0};
        std::chrono::seconds freq{0};
    };

    std::optional<Window> window_at_or_after(TimePoint t) const;
    void sample(TimePoint at);
    std::optional<TimePoint> next_in_span(TimePoint anchor, std::chrono::milliseconds step,
                                          TimePoint after) const;

    SensorSpec spec_;
    protocol::SimCalendar cal_;
    std::vector<ValueWalk> walks_;

    Mode mode_ = Mode::idle;
    bool expired_ = false;
    TimePoint cursor_{0};
    TimePoint anchor_{0};
    std::chrono::seconds rate_{0};
    std::chrono::seconds freq_{0};
    std::optional<TimePoint> expiry_;
    protocol::Schedule schedule_;
    std::vector<protocol::Reading> pending_;
};

}  // namespace caddot::sensor
