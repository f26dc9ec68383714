#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "caddot/protocol/command.hpp"
#include "caddot/protocol/message.hpp"
#include "caddot/sensor/dialect.hpp"
#include "caddot/sensor/engine.hpp"
#include "caddot/sensor/fleet.hpp"

namespace caddot::sensor {

enum class Mode {
    booting,
    seeking,
    listening,
    push_temp,
    push_scheduled,
    stopped,
    direct,
};

std::string_view to_string(Mode m);

// ── SensorCore ───────────────────────────────────────────────────────────────
//
// The testable heart of a virtual sensor: a pure transition function from
// (state, inbound dialect line) to (state', reply lines, effects). The
// runtime executes the effects (sink connection, schedule fetch, session
// close); nothing here touches a socket or a clock.

class SensorCore {
public:
    explicit SensorCore(SensorSpec spec);

    struct TempPush {
        std::chrono::seconds rate{0};
        std::chrono::seconds freq{0};
        std::chrono::seconds duration{0};
    };

    struct Effects {
        bool go_direct = false;                         // C8 acknowledged
        bool close_connection = false;                  // dialect C: session spent
        std::optional<protocol::FetchSettings> fetch;   // C7 with a remote server
        std::optional<TempPush> start_temp_push;        // C3
        bool rearm = false;                             // standing engine state changed
    };

    struct Result {
        std::vector<std::string> replies;
        Effects effects;
    };

    // All failures become Err replies; never throws on wire input.
    Result handle_line(std::string_view line, TimePoint now);

    // Remote fetch outcome (the fetch is the runtime's job); returns the
    // deferred C7 reply.
    Result complete_fetch(const std::variant<protocol::Schedule, protocol::Err>& outcome);

    // Sink connection outcomes after a C8.
    void confirm_direct();
    std::string direct_failed();  // reply line; sensor stays where it was

    // Temporary push expired (engine side).
    void temp_expired();

    // Runtime lifecycle hooks.
    void enter(Mode m) { mode_ = m; }
    void on_new_connection();
    void set_telemetry(std::int64_t boot_ms, std::int64_t scan_ms, std::int64_t conn_ms);

    Mode mode() const { return mode_; }
    const SensorSpec& spec() const { return spec_; }
    const protocol::SensingStrategy& strategy() const { return strategy_; }
    const std::optional<protocol::Schedule>& schedule() const { return schedule_; }
    const std::optional<protocol::NetworkSettings>& net() const { return net_; }
    const std::optional<TempPush>& temp_push() const { return temp_; }
    protocol::SensorProfile profile() const;
    DialectCodec& codec() { return *codec_; }

private:
    Result apply(const protocol::Command& cmd, TimePoint now);
    std::string out(const protocol::Message& msg, bool who_reply = false);

    SensorSpec spec_;
    std::unique_ptr<DialectCodec> codec_;
    Mode mode_ = Mode::booting;
    protocol::SensingStrategy strategy_;  // standing strategy; schedule kept separately
    std::optional<protocol::Schedule> schedule_;
    std::optional<protocol::NetworkSettings> net_;
    std::optional<TempPush> temp_;
    std::vector<ValueWalk> pull_walks_;
    std::vector<std::pair<std::string, std::string>> telemetry_;
};

}  // namespace caddot::sensor
