#pragma once

#include <atomic>
#include <deque>
#include <map>
#include <thread>

#include "caddot/configurator/pipeline.hpp"
#include "caddot/transport/transport.hpp"

namespace caddot::configurator {

// Roving-beacon plan for mobile mode: visit each zone for the dwell time,
// round robin.
struct MobilePlan {
    std::vector<std::string> zones;
    std::chrono::milliseconds dwell{5000};
};

struct OrchestratorConfig {
    std::vector<transport::BeaconSpec> beacons;
    PipelineConfig pipeline;
    int parallelism = 8;
    std::chrono::milliseconds extract_timeout{2000};
    int extract_retries = 3;
    std::optional<MobilePlan> mobile;
};

// ── Orchestrator ─────────────────────────────────────────────────────────────
//
// The configurator core: beacons on the requested transports, answers every
// arrival with [WHO], routes re-arrivals of in-flight sensors back to their
// session, and drives one configuration pipeline per new sensor under a
// parallelism limit. Traces are collected append-only.

class Orchestrator {
public:
    Orchestrator(transport::Transport& net, OrchestratorConfig cfg);
    ~Orchestrator();

    void start();
    void stop();

    std::vector<SessionTrace> traces() const;
    std::size_t trace_count() const;

    // Waits until at least n traces exist.
    bool wait_traces(std::size_t n, std::chrono::milliseconds timeout);

    // Re-runs reason+configure for a configured sensor over its direct
    // connection; the trace is appended and returned.
    SessionTrace reconfigure(const std::string& sensor_id);

    // Observability for tests.
    std::vector<std::string> beacon_zones() const;
    int open_adapter_sessions() const { return open_sessions_.load(); }
    int max_open_adapter_sessions() const { return max_open_sessions_.load(); }

private:
    class RoutedLink;

    void arrival_loop(transport::Beacon& beacon, const transport::BeaconSpec& spec);
    void route(std::unique_ptr<transport::Session> session,
               const transport::BeaconSpec& spec);
    void run_session(Arrival arrival, std::shared_ptr<RoutedLink> link,
                     const transport::BeaconSpec& spec, TraceBuilder builder);
    void mobile_loop();
    void add_trace(SessionTrace trace);
    void add_thread(std::thread t);

    transport::Transport& net_;
    Clock& clock_;
    OrchestratorConfig cfg_;

    std::vector<std::unique_ptr<transport::Beacon>> beacons_;
    std::atomic<bool> stopping_{false};

    mutable std::mutex mu_;
    ClockCond traces_cond_;
    std::vector<SessionTrace> traces_;
    std::map<std::string, std::shared_ptr<RoutedLink>> in_flight_;
    std::vector<std::unique_ptr<transport::Session>> abandoned_;

    std::mutex slots_mu_;
    ClockCond slots_cond_;
    int slots_used_ = 0;

    std::atomic<int> open_sessions_{0};
    std::atomic<int> max_open_sessions_{0};

    std::mutex threads_mu_;
    std::vector<std::thread> threads_;
    ClockCond stop_cond_;
    std::mutex stop_mu_;
};

}  // namespace caddot::configurator
