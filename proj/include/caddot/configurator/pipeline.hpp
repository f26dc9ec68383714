#pragma once

#include <memory>

#include "caddot/configurator/trace.hpp"
#include "caddot/plugin/adapter.hpp"
#include "caddot/registry/client.hpp"

namespace caddot::configurator {

struct PipelineConfig {
    registry::Client* registry = nullptr;
    plugin::AdapterHost* host = nullptr;
    // What C8 hands to sensors.
    std::string sink_host = "127.0.0.1";
    int sink_port = 0;
    std::string access_point = "caddot-open";
    std::string auth_key = "open-net";

    std::chrono::milliseconds step_timeout{5000};
    std::chrono::milliseconds direct_timeout{10'000};
    int retries = 3;
    std::chrono::milliseconds retry_backoff{250};
};

// One routed arrival: the sensor's identity is already extracted; its current
// (and any future) sessions come through the link.
struct Arrival {
    protocol::SensorIdentity identity;
    std::int64_t boot_ms = 0;
    std::int64_t scan_ms = 0;
    std::int64_t conn_ms = 0;
    TimePoint who_sent;
    TimePoint m1_received;
};

// Runs phases identify..configure for one extracted sensor, filling the
// trace. The extract phase (steps 1-4) is recorded by the caller.
SessionTrace run_configuration(const Arrival& arrival, plugin::SessionLink& link,
                               const PipelineConfig& cfg, TraceBuilder builder,
                               Clock& clock);

// Re-runs reason+configure over the sensor's direct (relay) path; used when
// context changes. The trace carries steps 6-10 only.
SessionTrace run_reconfiguration(const std::string& sensor_id, const std::string& transport,
                                 const PipelineConfig& cfg, Clock& clock);

}  // namespace caddot::configurator
