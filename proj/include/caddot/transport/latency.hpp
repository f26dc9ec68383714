#pragma once

#include <chrono>
#include <random>

#include "caddot/transport/endpoint.hpp"

namespace caddot::transport {

// A delay drawn per event: fixed, uniform over a range, or zero.
struct DelaySpec {
    std::chrono::milliseconds lo{0};
    std::chrono::milliseconds hi{0};

    static DelaySpec none() { return {}; }
    static DelaySpec fixed(std::chrono::milliseconds d) { return {d, d}; }
    static DelaySpec uniform(std::chrono::milliseconds lo, std::chrono::milliseconds hi) {
        return {lo, hi};
    }

    bool is_zero() const { return lo.count() == 0 && hi.count() == 0; }

    std::chrono::milliseconds sample(std::mt19937_64& rng) const {
        if (is_zero()) return std::chrono::milliseconds(0);
        if (lo == hi) return lo;
        std::uniform_int_distribution<std::int64_t> d(lo.count(), hi.count());
        return std::chrono::milliseconds(d(rng));
    }
};

struct KindLatency {
    DelaySpec scan;
    DelaySpec connect;
    DelaySpec per_message;
};

// Injectable delays for the harness's emulation mode. Disabled (all zero) by
// default; the emulation profile gives the channel transport a scan time far
// above tcp/udp, a sub-4 s open-endpoint connect, and sensor-side boot,
// fetch, and sink-connect delays.
struct LatencyModel {
    KindLatency tcp;
    KindLatency udp;
    KindLatency channel;
    DelaySpec boot;
    DelaySpec fetch;
    DelaySpec sink_connect;

    static LatencyModel none() { return {}; }
    static LatencyModel emulation_profile();

    const KindLatency& kind(TransportKind k) const {
        switch (k) {
            case TransportKind::tcp: return tcp;
            case TransportKind::udp: return udp;
            case TransportKind::channel: return channel;
        }
        return tcp;
    }
};

}  // namespace caddot::transport
