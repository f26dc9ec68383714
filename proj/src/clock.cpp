#include "caddot/clock.hpp"

#include <cassert>
#include <vector>

namespace caddot {

namespace {
thread_local int tl_participation = 0;
}

SimClock::SimClock() : SimClock(Options()) {}

SimClock::SimClock(Options opt) : opt_(opt) {
    if (opt_.auto_advance) {
        advancer_ = std::thread([this] { advancer_main(); });
    }
}

SimClock::~SimClock() {
    std::vector<std::condition_variable*> wake;
    {
        std::lock_guard<std::mutex> g(mu_);
        stop_ = true;
        for (auto& rec : recs_) {
            kick_locked(rec);
            if (rec.cv) wake.push_back(rec.cv);
        }
        ++gen_;
    }
    advancer_cv_.notify_all();
    sleeper_cv_.notify_all();
    for (auto* cv : wake) cv->notify_all();
    if (advancer_.joinable()) advancer_.join();
}

TimePoint SimClock::now() const {
    std::lock_guard<std::mutex> g(mu_);
    return {now_ms_};
}

SimClock::RecIt SimClock::add_rec_locked(std::condition_variable* cv,
                                         std::optional<std::int64_t> deadline) {
    recs_.emplace_back();
    auto it = std::prev(recs_.end());
    it->cv = cv;
    it->deadline = deadline;
    it->participant = tl_participation > 0;
    if (it->participant) ++blocked_participants_;
    ++gen_;
    advancer_cv_.notify_all();
    return it;
}

void SimClock::kick_locked(Rec& rec) {
    if (rec.kicked.load()) return;
    rec.kicked.store(true);
    if (rec.participant) --blocked_participants_;
    ++gen_;
}

void SimClock::sleep_until(TimePoint t) {
    std::unique_lock<std::mutex> lk(mu_);
    if (t.ms <= now_ms_) return;
    auto it = add_rec_locked(nullptr, t.ms);
    while (!it->kicked.load() && !stop_) {
        sleeper_cv_.wait(lk);
    }
    if (it->participant && !it->kicked.load()) --blocked_participants_;
    recs_.erase(it);
    ++gen_;
    advancer_cv_.notify_all();
}

void SimClock::cond_block(std::condition_variable& cv, std::unique_lock<std::mutex>& lk,
                          std::optional<TimePoint> deadline) {
    RecIt it;
    {
        std::lock_guard<std::mutex> g(mu_);
        std::optional<std::int64_t> dl;
        if (deadline) dl = deadline->ms;
        it = add_rec_locked(&cv, dl);
    }
    // The kicked flag is re-checked inside wait() before sleeping, so a kick
    // delivered between registration and the wait is never lost.
    cv.wait(lk, [&] { return it->kicked.load(); });
    {
        std::lock_guard<std::mutex> g(mu_);
        recs_.erase(it);
        ++gen_;
    }
    advancer_cv_.notify_all();
}

void SimClock::cond_notify(std::condition_variable& cv) {
    {
        std::lock_guard<std::mutex> g(mu_);
        for (auto& rec : recs_) {
            if (rec.cv == &cv) kick_locked(rec);
        }
        advancer_cv_.notify_all();
    }
    cv.notify_all();
}

void SimClock::add_participant() {
    std::lock_guard<std::mutex> g(mu_);
    ++tl_participation;
    ++participants_;
    ++gen_;
    advancer_cv_.notify_all();
}

void SimClock::remove_participant() {
    std::lock_guard<std::mutex> g(mu_);
    --tl_participation;
    --participants_;
    ++gen_;
    advancer_cv_.notify_all();
}

bool SimClock::can_advance_locked() const {
    if (participants_ == 0) return false;
    if (blocked_participants_ != participants_) return false;
    return min_deadline_locked().has_value();
}

std::optional<std::int64_t> SimClock::min_deadline_locked() const {
    std::optional<std::int64_t> best;
    for (const auto& rec : recs_) {
        if (rec.kicked.load() || !rec.deadline) continue;
        if (!best || *rec.deadline < *best) best = *rec.deadline;
    }
    return best;
}

void SimClock::advance_locked(std::int64_t to_ms) {
    if (to_ms > now_ms_) now_ms_ = to_ms;
    std::vector<std::condition_variable*> wake;
    bool wake_sleepers = false;
    for (auto& rec : recs_) {
        if (rec.kicked.load() || !rec.deadline || *rec.deadline > now_ms_) continue;
        kick_locked(rec);
        if (rec.cv) {
            wake.push_back(rec.cv);
        } else {
            wake_sleepers = true;
        }
    }
    ++gen_;
    if (wake_sleepers) sleeper_cv_.notify_all();
    for (auto* cv : wake) cv->notify_all();
}

void SimClock::advance(std::chrono::milliseconds d) {
    std::lock_guard<std::mutex> g(mu_);
    advance_locked(now_ms_ + d.count());
}

void SimClock::advance_to(TimePoint t) {
    std::lock_guard<std::mutex> g(mu_);
    advance_locked(t.ms);
}

void SimClock::advancer_main() {
    std::unique_lock<std::mutex> lk(mu_);
    while (!stop_) {
        if (!can_advance_locked()) {
            advancer_cv_.wait(lk);
            continue;
        }
        auto g0 = gen_;
        auto until = std::chrono::steady_clock::now() + opt_.grace;
        while (!stop_ && gen_ == g0 && std::chrono::steady_clock::now() < until) {
            advancer_cv_.wait_until(lk, until);
        }
        if (stop_) break;
        if (gen_ != g0 || !can_advance_locked()) continue;
        auto dl = min_deadline_locked();
        if (dl) advance_locked(*dl);
    }
}

}  // namespace caddot
