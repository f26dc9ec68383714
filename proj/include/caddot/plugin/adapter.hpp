#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

#include "caddot/plugin/catalog.hpp"
#include "caddot/protocol/message.hpp"
#include "caddot/sensor/dialect.hpp"
#include "caddot/transport/session.hpp"

namespace caddot::plugin {

enum class AdapterErrc {
    dialect_mismatch,
    timeout,
    bad_value,
    rejected,
    plugin_unavailable,
    link_lost,
};

std::string_view to_string(AdapterErrc code);

class AdapterError : public std::runtime_error {
public:
    AdapterError(AdapterErrc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    AdapterErrc code() const { return code_; }

private:
    AdapterErrc code_;
};

// Where an adapter gets its wire. Dialect C spends a session per command, so
// the link must be able to produce the sensor's next session after it
// reconnects.
class SessionLink {
public:
    virtual ~SessionLink() = default;

    virtual transport::Session& session() = 0;

    // Blocks until the sensor has re-attached; throws AdapterError(link_lost)
    // or (timeout).
    virtual transport::Session& await_replacement(std::chrono::milliseconds timeout) = 0;

    // False for links where one session lives forever (relay paths); dialect
    // C's session-per-command rule only applies to renewable links.
    virtual bool renewable() const { return true; }
};

// Adapter over one session, one per sensor being configured.

// ── Adapter ──────────────────────────────────────────────────────────────────
//
// The closed behavioral contract every plugin implements: translate the five
// canonical configuration operations into the sensor's dialect and the
// dialect's replies back. Adapters hold no state beyond the session they are
// bound to.

class Adapter {
public:
    virtual ~Adapter() = default;

    virtual void set_sampling_rate(std::chrono::seconds rate) = 0;
    virtual void set_communication_frequency(std::chrono::seconds freq) = 0;
    virtual void set_schedule(const protocol::FetchSettings& ftp) = 0;
    virtual void set_network_settings(const protocol::NetworkSettings& net) = 0;
    virtual protocol::SensorProfile get_sensor_profile() = 0;

    // Data-request extras used by tests and the audit tooling.
    virtual protocol::Reading pull() = 0;
    virtual void temporary_push(std::chrono::seconds rate, std::chrono::seconds freq,
                                std::chrono::seconds duration) = 0;
    virtual void schedule_push() = 0;
    virtual void stop() = 0;

    virtual const AdapterDescriptor& descriptor() const = 0;
};

// ── AdapterHost ──────────────────────────────────────────────────────────────
//
// Activates adapters from descriptors: either a built-in dialect or an
// artifact file in the local plugin directory that names one. Activation is
// idempotent per (plugin, link).

class AdapterHost {
public:
    explicit AdapterHost(std::string plugin_dir = {},
                         std::chrono::milliseconds reply_timeout = std::chrono::seconds(5));

    std::shared_ptr<Adapter> activate(const AdapterDescriptor& descriptor, SessionLink& link);

private:
    std::string plugin_dir_;
    std::chrono::milliseconds reply_timeout_;
    std::mutex mu_;
    std::map<std::pair<std::string, SessionLink*>, std::weak_ptr<Adapter>> active_;
};

// A link over a fixed session; replacement is unsupported (unit tests, and
// dialects that never reconnect).
class FixedLink final : public SessionLink {
public:
    explicit FixedLink(transport::Session& s) : session_(s) {}

    transport::Session& session() override { return session_; }
    transport::Session& await_replacement(std::chrono::milliseconds) override {
        throw AdapterError(AdapterErrc::link_lost, "link cannot be replaced");
    }
    bool renewable() const override { return false; }

private:
    transport::Session& session_;
};

}  // namespace caddot::plugin
