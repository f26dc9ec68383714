#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <random>

#include "caddot/clock.hpp"
#include "caddot/transport/beacon.hpp"
#include "caddot/transport/channel.hpp"
#include "caddot/transport/latency.hpp"
#include "caddot/transport/session.hpp"

namespace caddot::transport {

// ── Transport ────────────────────────────────────────────────────────────────
//
// One facade over the three session kinds plus beacon/scan, with optional
// latency injection. A process typically holds one instance; the channel
// transport is only reachable within that instance.

class Transport {
public:
    explicit Transport(Clock& clock, LatencyModel latency = LatencyModel::none(),
                       std::uint64_t seed = 0);

    Clock& clock() { return clock_; }
    ChannelHub& hub() { return hub_; }
    const LatencyModel& latency() const { return latency_; }

    // Configurator side: open the announced endpoint.
    std::unique_ptr<Beacon> open_beacon(const BeaconSpec& spec);

    // Sensor side: listen for announcements of the given kind. Returns the
    // endpoints heard; runs for max(window, modeled scan delay).
    std::vector<Endpoint> scan(TransportKind kind, std::chrono::milliseconds window,
                               int announce_port, const std::string& zone = "default");

    std::unique_ptr<Session> connect(const Endpoint& ep);

    // Sensor-side modeled delays (zero when emulation is off).
    std::chrono::milliseconds sample_boot_delay();
    std::chrono::milliseconds sample_fetch_delay();
    std::chrono::milliseconds sample_sink_connect_delay();

private:
    DelayFn per_message_fn(TransportKind kind);
    std::chrono::milliseconds sample(const DelaySpec& spec);
    std::shared_ptr<AnnounceBus> bus_for(int port);

    Clock& clock_;
    LatencyModel latency_;
    ChannelHub hub_;
    std::mutex mu_;
    std::mt19937_64 rng_;
    std::map<int, std::shared_ptr<AnnounceBus>> buses_;
};

}  // namespace caddot::transport
