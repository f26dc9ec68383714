#pragma once

#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "caddot/clock.hpp"
#include "caddot/transport/session.hpp"

namespace caddot::transport {

class ChannelListener;

// ── ChannelHub ───────────────────────────────────────────────────────────────
//
// In-process stand-in for a short-range radio. Listen points and beacon
// announcements are keyed by zone name; sessions are paired in-memory
// queues. Only reachable within one process.

class ChannelHub {
public:
    explicit ChannelHub(Clock& clock) : clock_(clock) {}

    std::shared_ptr<ChannelListener> open(const std::string& zone, DelayFn per_message = {});
    void close_listener(const std::string& zone);

    std::unique_ptr<Session> connect(const std::string& zone, DelayFn per_message = {});

    // Beacon-side announcement, visible to subscribers of the same zone.
    void announce(const std::string& zone, const Endpoint& what);

    class Subscription {
    public:
        Subscription(ChannelHub& hub, std::string zone);
        ~Subscription();
        std::vector<Endpoint> heard();

    private:
        friend class ChannelHub;
        ChannelHub& hub_;
        std::string zone_;
        std::mutex mu_;
        std::vector<Endpoint> heard_;
    };

    Clock& clock() { return clock_; }

private:
    friend class Subscription;
    std::mutex mu_;
    Clock& clock_;
    std::map<std::string, std::shared_ptr<ChannelListener>> listeners_;
    std::vector<Subscription*> subscribers_;
};

// Paired in-memory session: what one side sends lands in the other side's
// inbox.
class ChannelSession : public InboxSession {
public:
    ChannelSession(Clock& clock, Endpoint peer, DelayFn delay)
        : InboxSession(clock, std::move(peer), std::move(delay)) {}

    void bind(std::shared_ptr<ChannelSession> other) { other_ = std::move(other); }

protected:
    void transmit(std::string_view line) override {
        if (auto o = other_.lock()) {
            o->push_line(std::string(line));
        } else {
            throw_transport(TransportErrc::session_closed, "channel peer gone");
        }
    }

    void on_close() override {
        if (auto o = other_.lock()) o->mark_remote_closed();
    }

private:
    std::weak_ptr<ChannelSession> other_;
};

class ChannelListener {
public:
    ChannelListener(Clock& clock, std::string zone, DelayFn per_message)
        : clock_(clock), cond_(clock), zone_(std::move(zone)),
          per_message_(std::move(per_message)) {}

    // Blocks until an inbound session arrives; throws timeout.
    std::unique_ptr<Session> accept(std::chrono::milliseconds timeout);

    void enqueue(std::unique_ptr<Session> s);
    void close();
    bool is_open() const;
    const std::string& zone() const { return zone_; }
    DelayFn per_message() const { return per_message_; }

private:
    Clock& clock_;
    mutable std::mutex mu_;
    ClockCond cond_;
    std::string zone_;
    DelayFn per_message_;
    std::deque<std::unique_ptr<Session>> pending_;
    bool closed_ = false;
};

}  // namespace caddot::transport
