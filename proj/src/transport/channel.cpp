#include "caddot/transport/channel.hpp"

#include <algorithm>

namespace caddot::transport {

std::shared_ptr<ChannelListener> ChannelHub::open(const std::string& zone, DelayFn per_message) {
    std::lock_guard<std::mutex> g(mu_);
    auto it = listeners_.find(zone);
    if (it != listeners_.end() && it->second->is_open()) {
        throw_transport(TransportErrc::address_in_use, "channel zone " + zone);
    }
    auto listener = std::make_shared<ChannelListener>(clock_, zone, std::move(per_message));
    listeners_[zone] = listener;
    return listener;
}

void ChannelHub::close_listener(const std::string& zone) {
    std::shared_ptr<ChannelListener> l;
    {
        std::lock_guard<std::mutex> g(mu_);
        auto it = listeners_.find(zone);
        if (it == listeners_.end()) return;
        l = it->second;
        listeners_.erase(it);
    }
    if (l) l->close();
}

std::unique_ptr<Session> ChannelHub::connect(const std::string& zone, DelayFn per_message) {
    std::shared_ptr<ChannelListener> listener;
    {
        std::lock_guard<std::mutex> g(mu_);
        auto it = listeners_.find(zone);
        if (it != listeners_.end() && it->second->is_open()) listener = it->second;
    }
    if (!listener) {
        throw_transport(TransportErrc::connection_refused, "no channel listener in " + zone);
    }
    Endpoint ep{TransportKind::channel, zone};
    auto client = std::make_shared<ChannelSession>(clock_, ep, std::move(per_message));
    auto server = std::make_shared<ChannelSession>(clock_, ep, listener->per_message());
    client->bind(server);
    server->bind(client);

    // Hand the server side to the listener wrapped so ownership stays shared.
    struct Holder : Session {
        std::shared_ptr<ChannelSession> s;
        explicit Holder(std::shared_ptr<ChannelSession> p) : s(std::move(p)) {}
        void send(std::string_view line) override { s->send(line); }
        std::string recv(std::chrono::milliseconds t) override { return s->recv(t); }
        void close() override { s->close(); }
        bool is_open() const override { return s->is_open(); }
        Endpoint peer() const override { return s->peer(); }
    };
    listener->enqueue(std::make_unique<Holder>(server));
    return std::make_unique<Holder>(client);
}

void ChannelHub::announce(const std::string& zone, const Endpoint& what) {
    std::vector<Subscription*> subs;
    {
        std::lock_guard<std::mutex> g(mu_);
        subs = subscribers_;
    }
    for (auto* s : subs) {
        if (s->zone_ == zone) {
            std::lock_guard<std::mutex> g(s->mu_);
            s->heard_.push_back(what);
        }
    }
}

ChannelHub::Subscription::Subscription(ChannelHub& hub, std::string zone)
    : hub_(hub), zone_(std::move(zone)) {
    std::lock_guard<std::mutex> g(hub_.mu_);
    hub_.subscribers_.push_back(this);
}

ChannelHub::Subscription::~Subscription() {
    std::lock_guard<std::mutex> g(hub_.mu_);
    auto& v = hub_.subscribers_;
    v.erase(std::remove(v.begin(), v.end(), this), v.end());
}

std::vector<Endpoint> ChannelHub::Subscription::heard() {
    std::lock_guard<std::mutex> g(mu_);
    return heard_;
}

std::unique_ptr<Session> ChannelListener::accept(std::chrono::milliseconds timeout) {
    std::unique_lock<std::mutex> lk(mu_);
    auto deadline = clock_.now() + timeout;
    bool got = cond_.wait_until(lk, deadline, [&] { return closed_ || !pending_.empty(); });
    if (closed_) throw_transport(TransportErrc::session_closed, "listener closed");
    if (!got) throw_transport(TransportErrc::timeout, "accept deadline");
    auto s = std::move(pending_.front());
    pending_.pop_front();
    return s;
}

void ChannelListener::enqueue(std::unique_ptr<Session> s) {
    {
        std::lock_guard<std::mutex> g(mu_);
        if (closed_) return;
        pending_.push_back(std::move(s));
    }
    cond_.notify_all();
}

void ChannelListener::close() {
    {
        std::lock_guard<std::mutex> g(mu_);
        closed_ = true;
        pending_.clear();
    }
    cond_.notify_all();
}

bool ChannelListener::is_open() const {
    std::lock_guard<std::mutex> g(mu_);
    return !closed_;
}

}  // namespace caddot::transport
