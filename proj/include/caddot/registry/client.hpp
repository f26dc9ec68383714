#pragma once

#include <stdexcept>

#include "caddot/plugin/catalog.hpp"
#include "caddot/registry/service.hpp"
#include "caddot/transport/transport.hpp"

namespace caddot::registry {

class RegistryError : public std::runtime_error {
public:
    RegistryError(protocol::ErrCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    protocol::ErrCode code() const { return code_; }

private:
    protocol::ErrCode code_;
};

// What an identify reply carries.
struct RecordView {
    std::string id;
    std::string plugin_id;
    RegistrationStatus status = RegistrationStatus::known;
    std::chrono::seconds base_rate{0};
    std::chrono::seconds base_freq{0};
    std::vector<std::string> measures;
    std::string peer_temperature;
};

struct DirectStatus {
    bool connected = false;
    TimePoint at{-1};
    long gen = 0;
};

struct ReadingCounts {
    long readings = 0;
    long batches = 0;
};

// ── Client ───────────────────────────────────────────────────────────────────
//
// Wire client for the registry API. One connection per request, so instances
// are safe to share across concurrent sessions.

class Client {
public:
    Client(transport::Transport& net, transport::Endpoint api,
           std::chrono::milliseconds timeout = std::chrono::seconds(10));

    RecordView identify(const protocol::SensorIdentity& identity);
    plugin::AdapterDescriptor find_plugin(const std::string& id);
    Registration register_sensor(const std::string& id, const protocol::SensorProfile& profile,
                                 const protocol::SensingStrategy& strategy);
    protocol::SensingStrategy plan(const std::string& id);
    void set_context(const Context& context);
    void publish_schedule(const std::string& path, const std::string& user,
                          const std::string& pass, const std::string& text);
    std::string fetch_schedule(const std::string& path, const std::string& user,
                               const std::string& pass);
    DirectStatus wait_direct(const std::string& id, std::chrono::milliseconds timeout,
                             long min_gen = 1);
    ReadingCounts reading_counts(const std::string& id, TimePoint since);
    std::string relay(const std::string& id, const std::string& line,
                      std::chrono::milliseconds timeout);

private:
    std::vector<std::string> request(const std::string& line,
                                     std::chrono::milliseconds timeout);

    transport::Transport& net_;
    transport::Endpoint api_;
    std::chrono::milliseconds timeout_;
};

}  // namespace caddot::registry
