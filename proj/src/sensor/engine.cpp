#include "caddot/sensor/engine.hpp"

namespace caddot::sensor {

using protocol::Reading;

namespace {
constexpr std::int64_t kMsPerMinute = 60'000;

std::chrono::milliseconds to_ms(std::chrono::seconds s) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(s);
}
}  // namespace

SensingEngine::SensingEngine(const SensorSpec& spec, protocol::SimCalendar cal)
    : spec_(spec), cal_(cal) {
    for (const auto& p : spec_.phenomena) {
        walks_.emplace_back(p.seed);
    }
}

void SensingEngine::arm_interval(TimePoint t0, std::chrono::seconds rate,
                                 std::chrono::seconds freq, std::optional<TimePoint> expiry) {
    mode_ = Mode::interval;
    expired_ = false;
    cursor_ = t0;
    anchor_ = t0;
    rate_ = rate;
    freq_ = freq;
    expiry_ = expiry;
    pending_.clear();
}

void SensingEngine::arm_schedule(TimePoint t0, protocol::Schedule schedule) {
    mode_ = Mode::schedule;
    expired_ = false;
    cursor_ = t0;
    schedule_ = std::move(schedule);
    pending_.clear();
}

void SensingEngine::disarm() {
    mode_ = Mode::idle;
    pending_.clear();
}

void SensingEngine::sample(TimePoint at) {
    for (std::size_t i = 0; i < spec_.phenomena.size(); ++i) {
        const auto& p = spec_.phenomena[i];
        pending_.push_back(Reading{spec_.identity.id, p.name, walks_[i].next(), p.unit, at});
    }
}

// Smallest anchor + k*step (k >= 1) strictly greater than `after`.
std::optional<TimePoint> SensingEngine::next_in_span(TimePoint anchor,
                                                     std::chrono::milliseconds step,
                                                     TimePoint after) const {
    if (step.count() <= 0) return std::nullopt;
    auto elapsed = after.ms - anchor.ms;
    std::int64_t k = elapsed < 0 ? 1 : elapsed / step.count() + 1;
    return TimePoint{anchor.ms + k * step.count()};
}

std::optional<SensingEngine::Window> SensingEngine::window_at_or_after(TimePoint t) const {
    const protocol::ScheduleEntry* entry = protocol::active_entry(schedule_, cal_, t);
    TimePoint probe = t;
    if (!entry) {
        auto open = protocol::next_window_start(schedule_, cal_, t);
        if (!open) return std::nullopt;
        probe = *open;
        entry = protocol::active_entry(schedule_, cal_, probe);
        if (!entry) return std::nullopt;
    }
    auto tod = cal_.time_of_day_at(probe);
    std::int64_t midnight =
        probe.ms - probe.ms % kMsPerMinute - static_cast<std::int64_t>(tod.minutes) * kMsPerMinute;
    Window w;
    w.open = {midnight + static_cast<std::int64_t>(entry->start.minutes) * kMsPerMinute};
    w.close = {midnight + static_cast<std::int64_t>(entry->end.minutes) * kMsPerMinute};
    w.rate = entry->sampling_rate;
    w.freq = entry->comm_frequency;
    return w;
}

std::optional<TimePoint> SensingEngine::next_event() const {
    if (mode_ == Mode::interval) {
        std::optional<TimePoint> best;
        auto consider = [&](std::optional<TimePoint> t) {
            if (!t) return;
            if (expiry_ && *t > *expiry_) return;
            if (!best || *t < *best) best = *t;
        };
        consider(next_in_span(anchor_, to_ms(rate_), cursor_));
        consider(next_in_span(anchor_, to_ms(freq_), cursor_));
        if (expiry_ && cursor_ < *expiry_) consider(*expiry_);
        return best;
    }
    if (mode_ == Mode::schedule) {
        auto w = window_at_or_after(cursor_);
        if (!w) return std::nullopt;
        std::optional<TimePoint> best;
        auto consider = [&](std::optional<TimePoint> t) {
            if (!t) return;
            if (*t >= w->close) return;  // close is exclusive for samples/batches
            if (!best || *t < *best) best = *t;
        };
        consider(next_in_span(w->open, to_ms(w->rate), cursor_));
        consider(next_in_span(w->open, to_ms(w->freq), cursor_));
        if (!best && cursor_ < w->close) return w->close;  // flush point
        if (!best) {
            // Cursor sits exactly at close; move to the next window.
            auto next = window_at_or_after(TimePoint{w->close.ms + 1});
            if (!next) return std::nullopt;
            std::optional<TimePoint> b2;
            auto consider2 = [&](std::optional<TimePoint> t) {
                if (!t || *t >= next->close) return;
                if (!b2 || *t < *b2) b2 = *t;
            };
            consider2(next_in_span(next->open, to_ms(next->rate), cursor_));
            consider2(next_in_span(next->open, to_ms(next->freq), cursor_));
            if (b2) return b2;
            return next->close;
        }
        return best;
    }
    return std::nullopt;
}

std::vector<std::vector<Reading>> SensingEngine::advance_to(TimePoint t) {
    std::vector<std::vector<Reading>> batches;
    while (armed()) {
        auto e = next_event();
        if (!e || *e > t) break;
        TimePoint at = *e;
        if (mode_ == Mode::interval) {
            bool in_scope = !expiry_ || at <= *expiry_;
            auto since = at.ms - anchor_.ms;
            if (in_scope && since > 0 && since % to_ms(rate_).count() == 0) sample(at);
            if (in_scope && since > 0 && since % to_ms(freq_).count() == 0 &&
                !pending_.empty()) {
                batches.push_back(std::move(pending_));
                pending_.clear();
            }
            if (expiry_ && at == *expiry_) {
                if (!pending_.empty()) {
                    batches.push_back(std::move(pending_));
                    pending_.clear();
                }
                mode_ = Mode::idle;
                expired_ = true;
            }
        } else {
            auto w = window_at_or_after(cursor_);
            if (!w) break;
            auto since = at.ms - w->open.ms;
            if (at < w->close && since > 0) {
                if (since % to_ms(w->rate).count() == 0) sample(at);
                if (since % to_ms(w->freq).count() == 0 && !pending_.empty()) {
                    batches.push_back(std::move(pending_));
                    pending_.clear();
                }
            }
            if (at == w->close && !pending_.empty()) {
                batches.push_back(std::move(pending_));
                pending_.clear();
            }
        }
        cursor_ = at;
    }
    if (t > cursor_) cursor_ = t;
    return batches;
}

}  // namespace caddot::sensor
