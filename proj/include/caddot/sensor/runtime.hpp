#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <thread>

#include "caddot/protocol/schedule.hpp"
#include "caddot/sensor/core.hpp"
#include "caddot/transport/transport.hpp"

namespace caddot::sensor {

struct SensorNetConfig {
    transport::TransportKind kind = transport::TransportKind::tcp;
    int announce_port = 0;
    std::chrono::milliseconds scan_window{1500};
    std::chrono::milliseconds rescan_interval{500};
    protocol::SimCalendar calendar;
    // Observation hook: every line this sensor receives ("in") or sends
    // ("out") on a configurator session.
    std::function<void(const std::string& id, const char* dir, const std::string& line)>
        line_tap;
};

class FleetError : public std::runtime_error {
public:
    explicit FleetError(const std::string& what) : std::runtime_error(what) {}
};

// ── SensorRuntime ────────────────────────────────────────────────────────────
//
// One thread driving one virtual sensor: boot, seek the beacon, answer
// commands via the SensorCore, run the sensing engine, and (after C8) deliver
// readings to the sink over an authenticated connection that doubles as a
// command relay.

class SensorRuntime {
public:
    SensorRuntime(SensorSpec spec, transport::Transport& net, SensorNetConfig cfg);
    ~SensorRuntime();

    void start();
    void stop();  // abrupt departure; safe to call twice

    Mode mode() const;
    protocol::SensingStrategy strategy() const;
    std::optional<protocol::Schedule> schedule() const;
    const SensorSpec& spec() const { return spec_; }

private:
    enum class Action { none, lost, reseek, direct };

    void run();
    void run_cpd();
    void run_spd();
    Action session_loop(transport::Session& session);
    Action direct_loop();
    bool try_sink_connect();
    void rearm_standing(TimePoint now);
    void send_batches(transport::Session& session, bool translate,
                      std::vector<std::vector<protocol::Reading>> batches);
    std::variant<protocol::Schedule, protocol::Err> do_fetch(
        const protocol::FetchSettings& settings);
    Action handle_result(transport::Session& session, SensorCore::Result result);
    bool stopping() const;
    bool interruptible_sleep(std::chrono::milliseconds d);

    SensorSpec spec_;
    transport::Transport& net_;
    SensorNetConfig cfg_;
    Clock& clock_;

    mutable std::mutex core_mu_;
    SensorCore core_;
    SensingEngine engine_;

    mutable std::mutex life_mu_;
    ClockCond stop_cond_;
    bool stop_ = false;
    transport::Session* live_session_ = nullptr;  // for abrupt departure
    std::unique_ptr<transport::Session> sink_;

    std::int64_t boot_ms_ = 0;
    std::thread thread_;
};

// Spawns and owns a fleet of sensor runtimes; ids are unique per fleet.
class FleetRuntime {
public:
    FleetRuntime(transport::Transport& net, SensorNetConfig cfg) : net_(net), cfg_(cfg) {}
    ~FleetRuntime() { stop_all(); }

    SensorRuntime& spawn_sensor(const SensorSpec& spec);
    SensorRuntime* find(const std::string& id);
    void stop_sensor(const std::string& id);
    void stop_all();

    std::vector<SensorRuntime*> all();

private:
    transport::Transport& net_;
    SensorNetConfig cfg_;
    std::mutex mu_;
    std::map<std::string, std::unique_ptr<SensorRuntime>> sensors_;
};

}  // namespace caddot::sensor
