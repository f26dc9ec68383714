#include "caddot/transport/tcp.hpp"

#include <vector>

#include "caddot/clock.hpp"
#include "socket_util.hpp"

namespace caddot::transport {

namespace {

using detail::Fd;

// Owns the connected fd and a reader thread that feeds the inbox.
class TcpSession final : public InboxSession {
public:
    TcpSession(Clock& clock, Fd fd, Endpoint peer, DelayFn delay)
        : InboxSession(clock, std::move(peer), std::move(delay)), fd_(std::move(fd)) {
        reader_ = std::thread([this] { read_loop(); });
    }

    ~TcpSession() override {
        close();
        if (reader_.joinable()) reader_.join();
    }

protected:
    void transmit(std::string_view line) override {
        std::lock_guard<std::mutex> g(write_mu_);
        std::size_t off = 0;
        while (off < line.size()) {
            auto n = ::send(fd_.get(), line.data() + off, line.size() - off, MSG_NOSIGNAL);
            if (n <= 0) {
                throw_transport(TransportErrc::session_closed, "tcp send failed");
            }
            off += static_cast<std::size_t>(n);
        }
    }

    void on_close() override { fd_.shutdown_and_reset(); }

private:
    void read_loop() {
        std::string buf;
        char chunk[4096];
        for (;;) {
            auto n = ::recv(fd_.get(), chunk, sizeof(chunk), 0);
            if (n <= 0) break;
            buf.append(chunk, static_cast<std::size_t>(n));
            std::size_t pos;
            while ((pos = buf.find('\n')) != std::string::npos) {
                push_line(buf.substr(0, pos + 1));
                buf.erase(0, pos + 1);
            }
        }
        mark_remote_closed();
    }

    Fd fd_;
    std::mutex write_mu_;
    std::thread reader_;
};

}  // namespace

struct TcpListener::Impl {
    Impl(Clock& clock, DelayFn delay) : clock(clock), cond(clock), per_message(std::move(delay)) {}

    Clock& clock;
    Fd fd;
    Endpoint local;
    DelayFn per_message;
    std::mutex mu;
    ClockCond cond;
    std::deque<std::unique_ptr<Session>> pending;
    bool closed = false;
    std::thread acceptor;

    void accept_loop() {
        for (;;) {
            sockaddr_in peer{};
            socklen_t len = sizeof(peer);
            int cfd = ::accept(fd.get(), reinterpret_cast<sockaddr*>(&peer), &len);
            if (cfd < 0) break;
            Endpoint ep{TransportKind::tcp, detail::addr_to_string(peer)};
            auto session =
                std::make_unique<TcpSession>(clock, Fd(cfd), std::move(ep), per_message);
            {
                std::lock_guard<std::mutex> g(mu);
                if (closed) break;
                pending.push_back(std::move(session));
            }
            cond.notify_all();
        }
    }
};

TcpListener::TcpListener(Clock& clock, const std::string& host, int port, DelayFn per_message) {
    impl_ = std::make_shared<Impl>(clock, std::move(per_message));
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw_transport(TransportErrc::unreachable, "socket()");
    detail::set_reuse(fd);
    auto addr = detail::make_addr(host, port);
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(fd);
        throw_transport(TransportErrc::address_in_use,
                        "tcp " + host + ":" + std::to_string(port));
    }
    if (::listen(fd, 64) != 0) {
        ::close(fd);
        throw_transport(TransportErrc::address_in_use, "listen()");
    }
    impl_->fd = Fd(fd);
    impl_->local = {TransportKind::tcp, host + ":" + std::to_string(detail::bound_port(fd))};
    impl_->acceptor = std::thread([impl = impl_] { impl->accept_loop(); });
}

TcpListener::~TcpListener() {
    close();
    if (impl_ && impl_->acceptor.joinable()) impl_->acceptor.join();
}

std::unique_ptr<Session> TcpListener::accept(std::chrono::milliseconds timeout) {
    auto& im = *impl_;
    std::unique_lock<std::mutex> lk(im.mu);
    auto deadline = im.clock.now() + timeout;
    bool got =
        im.cond.wait_until(lk, deadline, [&] { return im.closed || !im.pending.empty(); });
    if (im.closed) throw_transport(TransportErrc::session_closed, "listener closed");
    if (!got) throw_transport(TransportErrc::timeout, "accept deadline");
    auto s = std::move(im.pending.front());
    im.pending.pop_front();
    return s;
}

Endpoint TcpListener::local() const {
    return impl_->local;
}

void TcpListener::close() {
    if (!impl_) return;
    {
        std::lock_guard<std::mutex> g(impl_->mu);
        if (impl_->closed) return;
        impl_->closed = true;
        impl_->pending.clear();
    }
    impl_->fd.shutdown_and_reset();
    impl_->cond.notify_all();
}

std::unique_ptr<Session> tcp_connect(Clock& clock, const std::string& host, int port,
                                     DelayFn per_message) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw_transport(TransportErrc::unreachable, "socket()");
    auto addr = detail::make_addr(host, port);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(fd);
        throw_transport(TransportErrc::connection_refused,
                        "tcp " + host + ":" + std::to_string(port));
    }
    Endpoint ep{TransportKind::tcp, host + ":" + std::to_string(port)};
    return std::make_unique<TcpSession>(clock, Fd(fd), std::move(ep), std::move(per_message));
}

}  // namespace caddot::transport
