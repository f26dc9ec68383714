#pragma once

#include <string>
#include <vector>

#include "caddot/clock.hpp"

namespace caddot::configurator {

// The ten timed steps of one discovery-and-configuration session.
enum class Step {
    setup = 1,       // sensor boot and module setup
    connect = 2,     // finding the open endpoint
    comm_init = 3,   // transport session establishment
    extract = 4,     // [WHO] -> M1
    retrieve = 5,    // complete profile (identify/find as sub-spans)
    conf_rate = 6,   // sampling rate (register/reason as sub-spans)
    conf_freq = 7,   // communication frequency
    conf_sched = 8,  // sensing schedule
    conf_net = 9,    // network and credentials
    direct = 10,     // authenticated connection to the sink
};

std::string_view step_name(Step s);

struct StepSpan {
    Step step;
    TimePoint start;
    TimePoint end;
    std::string outcome;  // "ok", "skipped", or a failure reason
};

struct SubSpan {
    std::string name;  // identify, find, register, reason
    TimePoint start;
    TimePoint end;
};

enum class SessionStatus { configured, failed };

struct SessionTrace {
    std::string sensor_id;
    std::string transport;
    std::vector<StepSpan> steps;
    std::vector<SubSpan> subspans;
    SessionStatus status = SessionStatus::failed;
    int failed_step = 0;
    std::string fail_reason;

    std::chrono::milliseconds step_duration(Step s) const;
    bool has_step(Step s) const;
};

// Builds gap-free traces: each step starts where the previous ended. A failed
// trace carries no spans past its failing step.
class TraceBuilder {
public:
    TraceBuilder(std::string sensor_id, std::string transport, Clock& clock);

    // Steps 1-3 happen sensor-side; the sensor reports their durations in M1
    // extras and the spans are laid out to end where step 4 began.
    void sensor_reported(std::int64_t boot_ms, std::int64_t scan_ms, std::int64_t conn_ms,
                         TimePoint step4_start);
    void record_extract(TimePoint start, TimePoint end);

    void begin(Step s);
    void end_ok();
    void skip(Step s, const std::string& why);

    void begin_sub(const std::string& name);
    void end_sub();

    SessionTrace fail(const std::string& reason);  // fails the currently open step
    SessionTrace fail_at(Step s, const std::string& reason);
    SessionTrace finish();

    TimePoint cursor() const { return cursor_; }

private:
    SessionTrace trace_;
    Clock& clock_;
    TimePoint cursor_{0};
    bool step_open_ = false;
    bool sub_open_ = false;
};

}  // namespace caddot::configurator
