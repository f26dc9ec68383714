#include <doctest.h>

#include <atomic>
#include <thread>
#include <vector>

#include "caddot/clock.hpp"

using namespace caddot;
using namespace std::chrono_literals;

TEST_CASE("manual sim clock advances and wakes sleepers") {
    SimClock clock;
    CHECK(clock.now().ms == 0);

    std::atomic<bool> woke{false};
    std::thread sleeper([&] {
        clock.sleep_for(5s);
        woke = true;
    });

    // Give the sleeper a moment to block, then advance short of the deadline.
    std::this_thread::sleep_for(20ms);
    clock.advance(4999ms);
    std::this_thread::sleep_for(20ms);
    CHECK(!woke.load());

    clock.advance(1ms);
    sleeper.join();
    CHECK(woke.load());
    CHECK(clock.now().ms == 5000);
}

TEST_CASE("clock cond wait honors predicate and deadline") {
    SimClock clock;
    std::mutex mu;
    ClockCond cond(clock);
    int value = 0;

    std::thread waiter([&] {
        std::unique_lock lk(mu);
        bool got = cond.wait_until(lk, TimePoint{1000}, [&] { return value == 42; });
        CHECK(!got);  // deadline passes first
        bool got2 = cond.wait_until(lk, TimePoint{10000}, [&] { return value == 42; });
        CHECK(got2);
    });

    std::this_thread::sleep_for(20ms);
    clock.advance(1000ms);  // trip the first deadline
    std::this_thread::sleep_for(20ms);
    {
        std::lock_guard g(mu);
        value = 42;
    }
    cond.notify_all();
    waiter.join();
}

TEST_CASE("auto-advance jumps to the earliest deadline when all block") {
    SimClock clock({.auto_advance = true, .grace = std::chrono::microseconds(500)});
    std::vector<std::int64_t> wake_times(3);
    std::vector<std::thread> threads;
    for (int i = 0; i < 3; ++i) {
        threads.emplace_back([&, i] {
            Clock::Participation p(clock);
            clock.sleep_for(std::chrono::seconds(i + 1));
            wake_times[static_cast<std::size_t>(i)] = clock.now().ms;
            // Second stagger: everyone sleeps again.
            clock.sleep_for(500ms);
        });
    }
    for (auto& t : threads) t.join();
    CHECK(wake_times[0] == 1000);
    CHECK(wake_times[1] == 2000);
    CHECK(wake_times[2] == 3000);
    CHECK(clock.now().ms == 3500);
}

TEST_CASE("auto-advance does not move while a participant is runnable") {
    SimClock clock({.auto_advance = true, .grace = std::chrono::microseconds(500)});
    std::atomic<bool> spin_done{false};
    std::atomic<std::int64_t> seen_at_spin_end{-1};

    std::thread busy([&] {
        Clock::Participation p(clock);
        auto until = std::chrono::steady_clock::now() + 50ms;
        while (std::chrono::steady_clock::now() < until) {
        }
        seen_at_spin_end = clock.now().ms;
        spin_done = true;
        clock.sleep_for(1s);
    });
    std::thread sleeper([&] {
        Clock::Participation p(clock);
        clock.sleep_for(10ms);
    });

    busy.join();
    sleeper.join();
    // While busy was runnable the clock must not have advanced; both deadlines
    // were taken from now=0, so the run ends at the later one.
    CHECK(seen_at_spin_end.load() == 0);
    CHECK(clock.now().ms == 1000);
}

TEST_CASE("event delivery kicks a waiter without advancing time") {
    SimClock clock({.auto_advance = true, .grace = std::chrono::microseconds(500)});
    std::mutex mu;
    ClockCond cond(clock);
    bool ready = false;
    std::int64_t woke_at = -1;

    std::thread consumer([&] {
        Clock::Participation p(clock);
        std::unique_lock lk(mu);
        cond.wait_until(lk, TimePoint{60'000}, [&] { return ready; });
        woke_at = clock.now().ms;
    });
    std::thread producer([&] {
        Clock::Participation p(clock);
        clock.sleep_for(250ms);
        {
            std::lock_guard g(mu);
            ready = true;
        }
        cond.notify_all();
    });

    consumer.join();
    producer.join();
    CHECK(woke_at == 250);  // woken by the event, not the 60 s deadline
}
