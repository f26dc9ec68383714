#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <list>
#include <mutex>
#include <optional>
#include <thread>

namespace caddot {

// Milliseconds since the start of a run, simulated or real depending on the
// Clock behind it.
struct TimePoint {
    std::int64_t ms = 0;

    friend constexpr auto operator<=>(const TimePoint&, const TimePoint&) = default;
};

constexpr TimePoint operator+(TimePoint t, std::chrono::milliseconds d) {
    return {t.ms + d.count()};
}

constexpr std::chrono::milliseconds operator-(TimePoint a, TimePoint b) {
    return std::chrono::milliseconds(a.ms - b.ms);
}

class ClockCond;

// ── Clock ────────────────────────────────────────────────────────────────────
//
// Virtual time source. Every blocking operation in the sensor, configurator,
// registry, and harness code paths goes through sleep_until() or a ClockCond
// so that a SimClock can coordinate advancement deterministically. Threads
// that block this way while a SimClock is auto-advancing must hold a
// Participation for their lifetime; the clock only advances virtual time when
// every participant is blocked.

class Clock {
public:
    virtual ~Clock() = default;

    virtual TimePoint now() const = 0;
    virtual void sleep_until(TimePoint t) = 0;

    void sleep_for(std::chrono::milliseconds d) {
        if (d.count() > 0) sleep_until(now() + d);
    }

    // RAII registration of the current thread as a simulation participant.
    class Participation {
    public:
        explicit Participation(Clock& c) : clock_(c) { clock_.add_participant(); }
        ~Participation() { clock_.remove_participant(); }
        Participation(const Participation&) = delete;
        Participation& operator=(const Participation&) = delete;

    private:
        Clock& clock_;
    };

protected:
    friend class ClockCond;

    // One blocking iteration of "wait on cv/lk until notified or deadline".
    // Callers loop on their predicate around this.
    virtual void cond_block(std::condition_variable& cv, std::unique_lock<std::mutex>& lk,
                            std::optional<TimePoint> deadline) = 0;
    virtual void cond_notify(std::condition_variable& cv) = 0;

    virtual void add_participant() {}
    virtual void remove_participant() {}
};

// ── ClockCond ────────────────────────────────────────────────────────────────
//
// Condition variable tied to a Clock. Usage mirrors std::condition_variable:
// producers mutate shared state under the caller's mutex, then notify_all().

class ClockCond {
public:
    explicit ClockCond(Clock& clock) : clock_(clock) {}

    void notify_all() { clock_.cond_notify(cv_); }

    // Wait until pred() holds or the deadline passes; returns pred() at exit.
    template <class Pred>
    bool wait_until(std::unique_lock<std::mutex>& lk, std::optional<TimePoint> deadline,
                    Pred pred) {
        while (!pred()) {
            if (deadline && clock_.now() >= *deadline) return pred();
            clock_.cond_block(cv_, lk, deadline);
        }
        return true;
    }

    template <class Pred>
    void wait(std::unique_lock<std::mutex>& lk, Pred pred) {
        wait_until(lk, std::nullopt, std::move(pred));
    }

    Clock& clock() { return clock_; }

private:
    Clock& clock_;
    std::condition_variable cv_;
};

// ── SystemClock ──────────────────────────────────────────────────────────────
//
// Real time, zeroed at construction. Used by the standalone CLI processes.

class SystemClock final : public Clock {
public:
    SystemClock() : start_(std::chrono::steady_clock::now()) {}

    TimePoint now() const override {
        auto d = std::chrono::steady_clock::now() - start_;
        return {std::chrono::duration_cast<std::chrono::milliseconds>(d).count()};
    }

    void sleep_until(TimePoint t) override {
        std::this_thread::sleep_until(start_ + std::chrono::milliseconds(t.ms));
    }

protected:
    void cond_block(std::condition_variable& cv, std::unique_lock<std::mutex>& lk,
                    std::optional<TimePoint> deadline) override {
        if (deadline) {
            cv.wait_until(lk, start_ + std::chrono::milliseconds(deadline->ms));
        } else {
            cv.wait(lk);
        }
    }

    void cond_notify(std::condition_variable& cv) override { cv.notify_all(); }

private:
    std::chrono::steady_clock::time_point start_;
};

// ── SimClock ─────────────────────────────────────────────────────────────────
//
// Virtual time. Two modes:
//
//   manual:        time moves only via advance()/advance_to(), driven by a
//                  test or a single-threaded driver.
//   auto-advance:  a background thread watches the registered participants;
//                  when all of them are blocked (sleeping or waiting on a
//                  ClockCond) and the state has been quiescent for a short
//                  real-time grace window, it jumps time to the earliest
//                  pending deadline. The grace window lets in-flight socket
//                  deliveries land before time moves.

class SimClock final : public Clock {
public:
    struct Options {
        bool auto_advance = false;
        std::chrono::microseconds grace{1500};
    };

    SimClock();
    explicit SimClock(Options opt);
    ~SimClock() override;

    TimePoint now() const override;
    void sleep_until(TimePoint t) override;

    void advance(std::chrono::milliseconds d);
    void advance_to(TimePoint t);

protected:
    void cond_block(std::condition_variable& cv, std::unique_lock<std::mutex>& lk,
                    std::optional<TimePoint> deadline) override;
    void cond_notify(std::condition_variable& cv) override;
    void add_participant() override;
    void remove_participant() override;

private:
    struct Rec {
        std::condition_variable* cv = nullptr;  // null for sleep_until waiters
        std::optional<std::int64_t> deadline;
        std::atomic<bool> kicked{false};
        bool participant = false;
    };

    using RecIt = std::list<Rec>::iterator;

    RecIt add_rec_locked(std::condition_variable* cv, std::optional<std::int64_t> deadline);
    void kick_locked(Rec& rec);
    bool can_advance_locked() const;
    std::optional<std::int64_t> min_deadline_locked() const;
    void advance_locked(std::int64_t to_ms);
    void advancer_main();

    mutable std::mutex mu_;
    std::condition_variable advancer_cv_;
    std::condition_variable sleeper_cv_;
    std::list<Rec> recs_;
    std::int64_t now_ms_ = 0;
    int participants_ = 0;
    int blocked_participants_ = 0;
    std::uint64_t gen_ = 0;
    bool stop_ = false;
    Options opt_;
    std::thread advancer_;
};

}  // namespace caddot
