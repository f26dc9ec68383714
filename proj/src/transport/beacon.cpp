#include "caddot/transport/beacon.hpp"

#include <algorithm>
#include <thread>

#include "caddot/protocol/wire.hpp"
#include "caddot/transport/tcp.hpp"
#include "caddot/transport/udp.hpp"
#include "socket_util.hpp"

namespace caddot::transport {

using detail::Fd;

std::string encode_announcement(const Endpoint& session_endpoint) {
    std::string host;
    std::string port = "0";
    if (session_endpoint.kind == TransportKind::channel) {
        host = session_endpoint.address;
    } else {
        auto hp = split_host_port(session_endpoint.address);
        host = hp ? hp->first : session_endpoint.address;
        port = hp ? std::to_string(hp->second) : "0";
    }
    return protocol::join_segments(
        {"CADDOT", std::string(to_string(session_endpoint.kind)), host, port});
}

std::optional<Endpoint> decode_announcement(std::string_view line) {
    auto split = protocol::split_segments(line);
    if (std::holds_alternative<protocol::WireError>(split)) return std::nullopt;
    const auto& segs = std::get<std::vector<std::string>>(split);
    if (segs.size() != 4 || segs[0] != "CADDOT") return std::nullopt;
    auto kind = transport_kind_from_string(segs[1]);
    if (!kind) return std::nullopt;
    if (*kind == TransportKind::channel) {
        return Endpoint{*kind, segs[2]};
    }
    return Endpoint{*kind, segs[2] + ":" + segs[3]};
}

// ── AnnounceBus ──────────────────────────────────────────────────────────────

struct AnnounceBus::Impl {
    Fd fd;
    int port = 0;
    std::mutex mu;
    std::vector<Subscription*> subs;
    std::thread reader;
    bool closed = false;

    void read_loop() {
        char buf[2048];
        for (;;) {
            auto n = ::recv(fd.get(), buf, sizeof(buf), 0);
            if (n <= 0) break;
            std::string line(buf, static_cast<std::size_t>(n));
            std::lock_guard<std::mutex> g(mu);
            for (auto* s : subs) {
                std::lock_guard<std::mutex> sg(s->mu_);
                s->heard_.push_back(line);
            }
        }
    }
};

AnnounceBus::AnnounceBus(Clock&, const std::string& host, int port) {
    impl_ = std::make_shared<Impl>();
    int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd < 0) throw_transport(TransportErrc::unreachable, "socket()");
    detail::set_reuse(fd);
    auto addr = detail::make_addr(host, port);
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(fd);
        throw_transport(TransportErrc::address_in_use,
                        "announce " + host + ":" + std::to_string(port));
    }
    impl_->fd = Fd(fd);
    impl_->port = detail::bound_port(fd);
    impl_->reader = std::thread([impl = impl_] { impl->read_loop(); });
}

AnnounceBus::~AnnounceBus() {
    impl_->fd.shutdown_and_reset();
    if (impl_->reader.joinable()) impl_->reader.join();
}

int AnnounceBus::port() const {
    return impl_->port;
}

AnnounceBus::Subscription::Subscription(AnnounceBus& bus) : bus_(bus) {
    std::lock_guard<std::mutex> g(bus_.impl_->mu);
    bus_.impl_->subs.push_back(this);
}

AnnounceBus::Subscription::~Subscription() {
    std::lock_guard<std::mutex> g(bus_.impl_->mu);
    auto& v = bus_.impl_->subs;
    v.erase(std::remove(v.begin(), v.end(), this), v.end());
}

std::vector<std::string> AnnounceBus::Subscription::heard() {
    std::lock_guard<std::mutex> g(mu_);
    return heard_;
}

// ── AnnounceSender ───────────────────────────────────────────────────────────

struct AnnounceSender::Impl {
    Fd fd;
    sockaddr_in addr{};
};

AnnounceSender::AnnounceSender(const std::string& host, int port) {
    impl_ = std::make_unique<Impl>();
    int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd < 0) throw_transport(TransportErrc::unreachable, "socket()");
    impl_->fd = Fd(fd);
    impl_->addr = detail::make_addr(host, port);
}

AnnounceSender::~AnnounceSender() = default;

void AnnounceSender::send(const std::string& line) {
    ::sendto(impl_->fd.get(), line.data(), line.size(), MSG_NOSIGNAL,
             reinterpret_cast<const sockaddr*>(&impl_->addr), sizeof(impl_->addr));
}

}  // namespace caddot::transport
