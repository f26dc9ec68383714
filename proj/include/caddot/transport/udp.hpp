#pragma once

#include <functional>
#include <memory>
#include <string>

#include "caddot/clock.hpp"
#include "caddot/transport/session.hpp"

namespace caddot::transport {

// UDP transport with per-session reliability: each direction numbers its
// lines and runs stop-and-wait with retransmission (3 retries, 250 ms), so
// the layer above sees an ordered, de-duplicated line stream.
//
// Frame formats (one datagram each):
//   S            open request        SA           open accepted
//   D <seq> <l>  data line           A <seq>      data ack
//   C            close notice

class UdpListener {
public:
    UdpListener(Clock& clock, const std::string& host, int port, DelayFn per_message = {});
    ~UdpListener();

    std::unique_ptr<Session> accept(std::chrono::milliseconds timeout);
    Endpoint local() const;
    void close();

private:
    struct Impl;
    std::shared_ptr<Impl> impl_;
};

// Drops outgoing frames for which the hook returns true (loss injection in
// tests). Applies to the next session created when passed to udp_connect.
using DropFn = std::function<bool(const std::string& frame)>;

std::unique_ptr<Session> udp_connect(Clock& clock, const std::string& host, int port,
                                     DelayFn per_message = {}, DropFn debug_drop = {});

}  // namespace caddot::transport
