#include "caddot/configurator/trace.hpp"

#include <algorithm>

namespace caddot::configurator {

std::string_view step_name(Step s) {
    switch (s) {
        case Step::setup: return "setup";
        case Step::connect: return "connect";
        case Step::comm_init: return "comm_init";
        case Step::extract: return "extract";
        case Step::retrieve: return "retrieve";
        case Step::conf_rate: return "conf_rate";
        case Step::conf_freq: return "conf_freq";
        case Step::conf_sched: return "conf_sched";
        case Step::conf_net: return "conf_net";
        case Step::direct: return "direct";
    }
    return "?";
}

std::chrono::milliseconds SessionTrace::step_duration(Step s) const {
    for (const auto& span : steps) {
        if (span.step == s) return span.end - span.start;
    }
    return std::chrono::milliseconds(-1);
}

bool SessionTrace::has_step(Step s) const {
    return std::any_of(steps.begin(), steps.end(),
                       [&](const StepSpan& span) { return span.step == s; });
}

TraceBuilder::TraceBuilder(std::string sensor_id, std::string transport, Clock& clock)
    : clock_(clock) {
    trace_.sensor_id = std::move(sensor_id);
    trace_.transport = std::move(transport);
}

void TraceBuilder::sensor_reported(std::int64_t boot_ms, std::int64_t scan_ms,
                                   std::int64_t conn_ms, TimePoint step4_start) {
    auto conn_start = TimePoint{step4_start.ms - conn_ms};
    auto scan_start = TimePoint{conn_start.ms - scan_ms};
    auto boot_start = TimePoint{scan_start.ms - boot_ms};
    trace_.steps.push_back({Step::setup, boot_start, scan_start, "ok"});
    trace_.steps.push_back({Step::connect, scan_start, conn_start, "ok"});
    trace_.steps.push_back({Step::comm_init, conn_start, step4_start, "ok"});
    cursor_ = step4_start;
}

void TraceBuilder::record_extract(TimePoint start, TimePoint end) {
    trace_.steps.push_back({Step::extract, start, end, "ok"});
    cursor_ = end;
}

void TraceBuilder::begin(Step s) {
    trace_.steps.push_back({s, cursor_, cursor_, ""});
    step_open_ = true;
}

void TraceBuilder::end_ok() {
    auto& span = trace_.steps.back();
    span.end = clock_.now();
    span.outcome = "ok";
    cursor_ = span.end;
    step_open_ = false;
}

void TraceBuilder::skip(Step s, const std::string& why) {
    trace_.steps.push_back({s, cursor_, cursor_, "skipped: " + why});
}

void TraceBuilder::begin_sub(const std::string& name) {
    trace_.subspans.push_back({name, clock_.now(), clock_.now()});
    sub_open_ = true;
}

void TraceBuilder::end_sub() {
    if (sub_open_) {
        trace_.subspans.back().end = clock_.now();
        sub_open_ = false;
    }
}

SessionTrace TraceBuilder::fail(const std::string& reason) {
    end_sub();
    if (step_open_) {
        auto& span = trace_.steps.back();
        span.end = clock_.now();
        span.outcome = reason;
        trace_.failed_step = static_cast<int>(span.step);
    } else if (!trace_.steps.empty()) {
        trace_.failed_step = static_cast<int>(trace_.steps.back().step);
    }
    trace_.status = SessionStatus::failed;
    trace_.fail_reason = reason;
    return trace_;
}

SessionTrace TraceBuilder::fail_at(Step s, const std::string& reason) {
    end_sub();
    trace_.steps.push_back({s, cursor_, clock_.now(), reason});
    trace_.status = SessionStatus::failed;
    trace_.failed_step = static_cast<int>(s);
    trace_.fail_reason = reason;
    return trace_;
}

SessionTrace TraceBuilder::finish() {
    trace_.status = SessionStatus::configured;
    trace_.failed_step = 0;
    trace_.fail_reason.clear();
    return trace_;
}

}  // namespace caddot::configurator
