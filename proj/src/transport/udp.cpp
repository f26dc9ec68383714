#include "caddot/transport/udp.hpp"

#include <charconv>
#include <deque>
#include <map>
#include <mutex>
#include <thread>
#include <vector>

#include "socket_util.hpp"

namespace caddot::transport {

namespace {

using detail::Fd;
using namespace std::chrono_literals;

constexpr auto kAckTimeout = 250ms;
constexpr int kRetries = 3;

std::optional<std::int64_t> parse_seq(std::string_view s) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

// Shared reliability logic for both ends of a UDP session.
class UdpSessionBase : public InboxSession {
public:
    UdpSessionBase(Clock& clock, Endpoint peer, DelayFn delay)
        : InboxSession(clock, std::move(peer), std::move(delay)), ack_cond_(clock) {}

    void on_frame(std::string_view frame) {
        if (frame.rfind("D ", 0) == 0) {
            auto rest = frame.substr(2);
            auto sp = rest.find(' ');
            if (sp == std::string_view::npos) return;
            auto seq = parse_seq(rest.substr(0, sp));
            if (!seq) return;
            auto payload = rest.substr(sp + 1);
            bool deliver = false;
            {
                std::lock_guard<std::mutex> g(state_mu_);
                if (*seq == rx_expect_) {
                    ++rx_expect_;
                    deliver = true;
                }
                // Both fresh and duplicate data get an ack; stop-and-wait means
                // anything else is stale.
            }
            if (deliver) push_line(std::string(payload));
            best_effort_send("A " + std::to_string(*seq));
        } else if (frame.rfind("A ", 0) == 0) {
            auto seq = parse_seq(frame.substr(2));
            if (!seq) return;
            {
                std::lock_guard<std::mutex> g(state_mu_);
                if (*seq > tx_acked_) tx_acked_ = *seq;
            }
            ack_cond_.notify_all();
        } else if (frame == "C") {
            mark_remote_closed();
        }
    }

protected:
    void transmit(std::string_view line) override {
        std::lock_guard<std::mutex> g(send_mu_);
        std::int64_t seq = ++tx_seq_;
        std::string frame = "D " + std::to_string(seq) + " " + std::string(line);
        for (int attempt = 0; attempt <= kRetries; ++attempt) {
            best_effort_send(frame);
            std::unique_lock<std::mutex> lk(state_mu_);
            auto deadline = clock_.now() + kAckTimeout;
            if (ack_cond_.wait_until(lk, deadline, [&] { return tx_acked_ >= seq; })) {
                return;
            }
        }
        throw_transport(TransportErrc::unreachable, "no ack after retries");
    }

    void on_close() override {
        best_effort_send("C");
        teardown();
    }

    virtual void raw_send(const std::string& frame) = 0;
    virtual void teardown() {}

    void best_effort_send(const std::string& frame) {
        try {
            raw_send(frame);
        } catch (const TransportError&) {
        }
    }

private:
    std::mutex send_mu_;   // one line in flight at a time per direction
    std::mutex state_mu_;
    ClockCond ack_cond_;
    std::int64_t tx_seq_ = 0;
    std::int64_t tx_acked_ = 0;
    std::int64_t rx_expect_ = 1;
};

class UdpClientSession final : public UdpSessionBase {
public:
    UdpClientSession(Clock& clock, Fd fd, Endpoint peer, DelayFn delay, DropFn drop)
        : UdpSessionBase(clock, std::move(peer), std::move(delay)), fd_(std::move(fd)),
          open_cond_(clock), drop_(std::move(drop)) {
        reader_ = std::thread([this] { read_loop(); });
    }

    ~UdpClientSession() override {
        close();
        if (reader_.joinable()) reader_.join();
    }

    // Open handshake; throws connection_refused when no listener answers.
    void open_handshake() {
        for (int attempt = 0; attempt <= kRetries; ++attempt) {
            try {
                raw_send("S");
            } catch (const TransportError&) {
            }
            std::unique_lock<std::mutex> lk(open_mu_);
            auto deadline = clock_.now() + kAckTimeout;
            if (open_cond_.wait_until(lk, deadline, [&] { return open_ok_; })) return;
        }
        throw_transport(TransportErrc::connection_refused, "no listener at " + peer().address);
    }

protected:
    void raw_send(const std::string& frame) override {
        if (drop_ && drop_(frame)) return;
        if (::send(fd_.get(), frame.data(), frame.size(), MSG_NOSIGNAL) < 0) {
            throw_transport(TransportErrc::unreachable, "udp send");
        }
    }

    void teardown() override { fd_.shutdown_and_reset(); }

private:
    void read_loop() {
        char buf[65536];
        for (;;) {
            auto n = ::recv(fd_.get(), buf, sizeof(buf), 0);
            if (n < 0) {
                if (errno == ECONNREFUSED) continue;  // ICMP error; retries handle it
                break;
            }
            std::string_view frame(buf, static_cast<std::size_t>(n));
            if (frame == "SA") {
                {
                    std::lock_guard<std::mutex> g(open_mu_);
                    open_ok_ = true;
                }
                open_cond_.notify_all();
            } else {
                on_frame(frame);
            }
        }
    }

    Fd fd_;
    std::mutex open_mu_;
    ClockCond open_cond_;
    bool open_ok_ = false;
    DropFn drop_;
    std::thread reader_;
};

}  // namespace

// ── Listener ─────────────────────────────────────────────────────────────────

namespace {

class UdpServerSession;

struct ListenerCore {
    ListenerCore(Clock& clock, DelayFn delay)
        : clock(clock), cond(clock), per_message(std::move(delay)) {}

    Clock& clock;
    Fd fd;
    Endpoint local;
    DelayFn per_message;
    std::mutex mu;
    ClockCond cond;
    std::deque<std::shared_ptr<UdpServerSession>> pending;
    std::map<std::string, std::weak_ptr<UdpServerSession>> routes;
    bool closed = false;

    void send_to(const sockaddr_in& addr, const std::string& frame) {
        if (::sendto(fd.get(), frame.data(), frame.size(), MSG_NOSIGNAL,
                     reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) < 0) {
            throw_transport(TransportErrc::unreachable, "udp sendto");
        }
    }
};

class UdpServerSession final : public UdpSessionBase {
public:
    UdpServerSession(std::shared_ptr<ListenerCore> core, sockaddr_in peer_addr, Endpoint peer)
        : UdpSessionBase(core->clock, std::move(peer), core->per_message),
          core_(std::move(core)), peer_addr_(peer_addr) {}

    ~UdpServerSession() override {
        close();
        std::lock_guard<std::mutex> g(core_->mu);
        core_->routes.erase(route_key_);
    }

    void set_route_key(std::string key) { route_key_ = std::move(key); }

protected:
    void raw_send(const std::string& frame) override { core_->send_to(peer_addr_, frame); }

private:
    std::shared_ptr<ListenerCore> core_;
    sockaddr_in peer_addr_;
    std::string route_key_;
};

}  // namespace

struct UdpListener::Impl {
    std::shared_ptr<ListenerCore> core;
    std::thread reader;

    void read_loop() {
        char buf[65536];
        for (;;) {
            sockaddr_in from{};
            socklen_t len = sizeof(from);
            auto n = ::recvfrom(core->fd.get(), buf, sizeof(buf), 0,
                                reinterpret_cast<sockaddr*>(&from), &len);
            if (n < 0) break;
            std::string_view frame(buf, static_cast<std::size_t>(n));
            auto key = detail::addr_to_string(from);

            if (frame == "S") {
                bool fresh = false;
                {
                    std::lock_guard<std::mutex> g(core->mu);
                    if (core->closed) break;
                    auto it = core->routes.find(key);
                    fresh = it == core->routes.end() || it->second.expired();
                }
                if (fresh) {
                    Endpoint ep{TransportKind::udp, key};
                    auto session = std::make_shared<UdpServerSession>(core, from, ep);
                    session->set_route_key(key);
                    {
                        std::lock_guard<std::mutex> g(core->mu);
                        core->routes[key] = session;
                        core->pending.push_back(std::move(session));
                    }
                    core->cond.notify_all();
                }
                try {
                    core->send_to(from, "SA");
                } catch (const TransportError&) {
                }
                continue;
            }

            std::shared_ptr<UdpServerSession> session;
            {
                std::lock_guard<std::mutex> g(core->mu);
                auto it = core->routes.find(key);
                if (it != core->routes.end()) session = it->second.lock();
            }
            if (session) session->on_frame(frame);
        }
    }
};

UdpListener::UdpListener(Clock& clock, const std::string& host, int port, DelayFn per_message) {
    impl_ = std::make_shared<Impl>();
    impl_->core = std::make_shared<ListenerCore>(clock, std::move(per_message));
    int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd < 0) throw_transport(TransportErrc::unreachable, "socket()");
    detail::set_reuse(fd);
    auto addr = detail::make_addr(host, port);
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(fd);
        throw_transport(TransportErrc::address_in_use,
                        "udp " + host + ":" + std::to_string(port));
    }
    impl_->core->fd = Fd(fd);
    impl_->core->local = {TransportKind::udp,
                          host + ":" + std::to_string(detail::bound_port(fd))};
    impl_->reader = std::thread([impl = impl_] { impl->read_loop(); });
}

UdpListener::~UdpListener() {
    close();
    if (impl_ && impl_->reader.joinable()) impl_->reader.join();
}

std::unique_ptr<Session> UdpListener::accept(std::chrono::milliseconds timeout) {
    auto& core = *impl_->core;
    std::shared_ptr<UdpServerSession> s;
    {
        std::unique_lock<std::mutex> lk(core.mu);
        auto deadline = core.clock.now() + timeout;
        bool got = core.cond.wait_until(lk, deadline,
                                        [&] { return core.closed || !core.pending.empty(); });
        if (core.closed) throw_transport(TransportErrc::session_closed, "listener closed");
        if (!got) throw_transport(TransportErrc::timeout, "accept deadline");
        s = std::move(core.pending.front());
        core.pending.pop_front();
    }
    struct Holder : Session {
        std::shared_ptr<UdpServerSession> s;
        explicit Holder(std::shared_ptr<UdpServerSession> p) : s(std::move(p)) {}
        void send(std::string_view line) override { s->send(line); }
        std::string recv(std::chrono::milliseconds t) override { return s->recv(t); }
        void close() override { s->close(); }
        bool is_open() const override { return s->is_open(); }
        Endpoint peer() const override { return s->peer(); }
    };
    return std::make_unique<Holder>(std::move(s));
}

Endpoint UdpListener::local() const {
    return impl_->core->local;
}

void UdpListener::close() {
    if (!impl_) return;
    auto& core = *impl_->core;
    {
        std::lock_guard<std::mutex> g(core.mu);
        if (core.closed) return;
        core.closed = true;
        core.pending.clear();
    }
    core.fd.shutdown_and_reset();
    core.cond.notify_all();
}

std::unique_ptr<Session> udp_connect(Clock& clock, const std::string& host, int port,
                                     DelayFn per_message, DropFn debug_drop) {
    int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd < 0) throw_transport(TransportErrc::unreachable, "socket()");
    auto addr = detail::make_addr(host, port);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(fd);
        throw_transport(TransportErrc::connection_refused,
                        "udp " + host + ":" + std::to_string(port));
    }
    Endpoint ep{TransportKind::udp, host + ":" + std::to_string(port)};
    auto session = std::make_unique<UdpClientSession>(clock, Fd(fd), std::move(ep),
                                                      std::move(per_message),
                                                      std::move(debug_drop));
    session->open_handshake();
    return session;
}

}  // namespace caddot::transport
