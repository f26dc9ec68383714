#include "caddot/transport/transport.hpp"

#include <thread>
#include <variant>

#include "caddot/transport/tcp.hpp"
#include "caddot/transport/udp.hpp"

namespace caddot::transport {

namespace {

// Session listener + periodic announcer. The announcer is a simulation
// participant so announcement times land on the virtual timeline.
class BeaconImpl final : public Beacon {
public:
    BeaconImpl(Transport& transport, Clock& clock, ChannelHub& hub, const BeaconSpec& spec,
               DelayFn per_message)
        : clock_(clock), hub_(hub), spec_(spec), stop_cond_(clock) {
        if (spec.kind == TransportKind::channel) {
            zone_ = spec.zone;
            channel_ = hub.open(zone_, per_message);
            session_ep_ = {TransportKind::channel, zone_};
        } else {
            if (spec.kind == TransportKind::tcp) {
                tcp_ = std::make_unique<TcpListener>(clock, spec.session_host,
                                                     spec.session_port, per_message);
                session_ep_ = tcp_->local();
            } else {
                udp_ = std::make_unique<UdpListener>(clock, spec.session_host,
                                                     spec.session_port, per_message);
                session_ep_ = udp_->local();
            }
            sender_ =
                std::make_unique<AnnounceSender>(spec.announce_host, spec.announce_port);
        }
        (void)transport;
        announcer_ = std::thread([this] { announce_loop(); });
    }

    ~BeaconImpl() override {
        close();
        if (announcer_.joinable()) announcer_.join();
    }

    std::unique_ptr<Session> accept(std::chrono::milliseconds timeout) override {
        if (tcp_) return tcp_->accept(timeout);
        if (udp_) return udp_->accept(timeout);
        // The channel listener is swapped out when a mobile beacon moves
        // zones; keep accepting from whichever is current.
        auto deadline = clock_.now() + timeout;
        for (;;) {
            std::shared_ptr<ChannelListener> ch;
            {
                std::lock_guard<std::mutex> g(mu_);
                if (stopped_) throw_transport(TransportErrc::session_closed, "beacon closed");
                ch = channel_;
            }
            if (!ch) throw_transport(TransportErrc::session_closed, "beacon closed");
            auto now = clock_.now();
            if (now >= deadline) throw_transport(TransportErrc::timeout, "accept deadline");
            auto slice = std::min(std::chrono::milliseconds(250),
                                  std::chrono::milliseconds(deadline.ms - now.ms));
            try {
                return ch->accept(slice);
            } catch (const TransportError& e) {
                if (e.code() == TransportErrc::timeout) continue;
                // Listener swapped or closed; loop to pick up the replacement.
                continue;
            }
        }
    }

    Endpoint session_endpoint() const override { return session_ep_; }

    void set_zone(const std::string& zone) override {
        if (spec_.kind != TransportKind::channel) return;
        {
            std::lock_guard<std::mutex> g(mu_);
            if (zone == zone_) return;
        }
        std::shared_ptr<ChannelListener> fresh = hub_.open(zone);
        std::shared_ptr<ChannelListener> old;
        {
            std::lock_guard<std::mutex> g(mu_);
            old = channel_;
            channel_ = fresh;
            zone_ = zone;
            session_ep_ = {TransportKind::channel, zone};
        }
        if (old) hub_.close_listener(old->zone());
    }

    void close() override {
        {
            std::lock_guard<std::mutex> g(mu_);
            if (stopped_) return;
            stopped_ = true;
        }
        stop_cond_.notify_all();
        if (tcp_) tcp_->close();
        if (udp_) udp_->close();
        std::shared_ptr<ChannelListener> ch;
        {
            std::lock_guard<std::mutex> g(mu_);
            ch = channel_;
        }
        if (ch) hub_.close_listener(ch->zone());
    }

private:
    void announce_loop() {
        Clock::Participation participation(clock_);
        std::unique_lock<std::mutex> lk(mu_);
        while (!stopped_) {
            announce_once_locked();
            auto next = clock_.now() + spec_.interval;
            stop_cond_.wait_until(lk, next, [&] { return stopped_; });
        }
    }

    void announce_once_locked() {
        if (spec_.kind == TransportKind::channel) {
            hub_.announce(zone_, session_ep_);
        } else {
            sender_->send(encode_announcement(session_ep_));
        }
    }

    Clock& clock_;
    ChannelHub& hub_;
    BeaconSpec spec_;
    std::mutex mu_;
    ClockCond stop_cond_;
    bool stopped_ = false;
    std::string zone_;
    Endpoint session_ep_;
    std::unique_ptr<TcpListener> tcp_;
    std::unique_ptr<UdpListener> udp_;
    std::shared_ptr<ChannelListener> channel_;
    std::unique_ptr<AnnounceSender> sender_;
    std::thread announcer_;
};

}  // namespace

Transport::Transport(Clock& clock, LatencyModel latency, std::uint64_t seed)
    : clock_(clock), latency_(latency), hub_(clock), rng_(seed ^ 0x9e3779b97f4a7c15ULL) {}

std::chrono::milliseconds Transport::sample(const DelaySpec& spec) {
    if (spec.is_zero()) return std::chrono::milliseconds(0);
    std::lock_guard<std::mutex> g(mu_);
    return spec.sample(rng_);
}

DelayFn Transport::per_message_fn(TransportKind kind) {
    auto spec = latency_.kind(kind).per_message;
    if (spec.is_zero()) return {};
    return [this, spec] { return sample(spec); };
}

std::shared_ptr<AnnounceBus> Transport::bus_for(int port) {
    std::lock_guard<std::mutex> g(mu_);
    auto it = buses_.find(port);
    if (it != buses_.end()) return it->second;
    auto bus = std::make_shared<AnnounceBus>(clock_, "127.0.0.1", port);
    buses_[port] = bus;
    return bus;
}

std::unique_ptr<Beacon> Transport::open_beacon(const BeaconSpec& spec) {
    return std::make_unique<BeaconImpl>(*this, clock_, hub_, spec,
                                        per_message_fn(spec.kind));
}

std::vector<Endpoint> Transport::scan(TransportKind kind, std::chrono::milliseconds window,
                                      int announce_port, const std::string& zone) {
    auto delay = sample(latency_.kind(kind).scan);
    auto duration = std::max(window, delay);

    std::vector<Endpoint> heard;
    if (kind == TransportKind::channel) {
        ChannelHub::Subscription sub(hub_, zone);
        clock_.sleep_for(duration);
        heard = sub.heard();
    } else {
        auto bus = bus_for(announce_port);
        AnnounceBus::Subscription sub(*bus);
        clock_.sleep_for(duration);
        for (const auto& line : sub.heard()) {
            auto ep = decode_announcement(line);
            if (ep && ep->kind == kind) heard.push_back(*ep);
        }
    }
    std::vector<Endpoint> unique;
    for (const auto& ep : heard) {
        if (std::find(unique.begin(), unique.end(), ep) == unique.end()) {
            unique.push_back(ep);
        }
    }
    return unique;
}

std::unique_ptr<Session> Transport::connect(const Endpoint& ep) {
    auto delay = sample(latency_.kind(ep.kind).connect);
    if (delay.count() > 0) clock_.sleep_for(delay);

    if (ep.kind == TransportKind::channel) {
        return hub_.connect(ep.address, per_message_fn(ep.kind));
    }
    auto hp = split_host_port(ep.address);
    if (!hp) throw_transport(TransportErrc::unreachable, "bad endpoint " + ep.address);
    if (ep.kind == TransportKind::tcp) {
        return tcp_connect(clock_, hp->first, hp->second, per_message_fn(ep.kind));
    }
    return udp_connect(clock_, hp->first, hp->second, per_message_fn(ep.kind));
}

std::chrono::milliseconds Transport::sample_boot_delay() {
    return sample(latency_.boot);
}

std::chrono::milliseconds Transport::sample_fetch_delay() {
    return sample(latency_.fetch);
}

std::chrono::milliseconds Transport::sample_sink_connect_delay() {
    return sample(latency_.sink_connect);
}

}  // namespace caddot::transport
