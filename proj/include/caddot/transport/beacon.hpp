#pragma once

#include <memory>
#include <string>
#include <vector>

#include "caddot/clock.hpp"
#include "caddot/transport/channel.hpp"
#include "caddot/transport/endpoint.hpp"
#include "caddot/transport/session.hpp"

namespace caddot::transport {

// ── Announcements ────────────────────────────────────────────────────────────
//
// The open, unauthenticated endpoint a configurator offers is advertised as
//
//   [CADDOT][<kind>][<host>][<port>]        (tcp/udp; UDP datagram)
//   [CADDOT][channel][<zone>][0]            (channel; in-process hub)
//
// repeated every interval. Sensors hear announcements by scanning.

std::string encode_announcement(const Endpoint& session_endpoint);
std::optional<Endpoint> decode_announcement(std::string_view line);

// Fans one bound UDP socket's datagrams out to any number of in-process
// subscribers, standing in for broadcast reception.
class AnnounceBus {
public:
    AnnounceBus(Clock& clock, const std::string& host, int port);
    ~AnnounceBus();

    int port() const;

    class Subscription {
    public:
        explicit Subscription(AnnounceBus& bus);
        ~Subscription();
        std::vector<std::string> heard();

    private:
        friend class AnnounceBus;
        AnnounceBus& bus_;
        std::mutex mu_;
        std::vector<std::string> heard_;
    };

private:
    friend class Subscription;
    struct Impl;
    std::shared_ptr<Impl> impl_;
};

// Sends announcement datagrams to the announce address.
class AnnounceSender {
public:
    AnnounceSender(const std::string& host, int port);
    ~AnnounceSender();
    void send(const std::string& line);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct BeaconSpec {
    TransportKind kind = TransportKind::tcp;
    std::string session_host = "127.0.0.1";
    int session_port = 0;  // 0 = ephemeral
    std::string announce_host = "127.0.0.1";
    int announce_port = 0;
    std::string zone = "default";
    std::chrono::milliseconds interval{1000};
};

// The open endpoint: a session listener plus a periodic announcer. Owns both;
// a second beacon on the same port fails with AddressInUse.
class Beacon {
public:
    virtual ~Beacon() = default;

    virtual std::unique_ptr<Session> accept(std::chrono::milliseconds timeout) = 0;
    virtual Endpoint session_endpoint() const = 0;

    // Mobile-mode support: move the announcer to another zone (channel only).
    virtual void set_zone(const std::string& zone) = 0;

    virtual void close() = 0;
};

}  // namespace caddot::transport
