#include "caddot/transport/session.hpp"

namespace caddot::transport {

std::string_view to_string(TransportErrc code) {
    switch (code) {
        case TransportErrc::address_in_use: return "AddressInUse";
        case TransportErrc::connection_refused: return "ConnectionRefused";
        case TransportErrc::timeout: return "Timeout";
        case TransportErrc::session_closed: return "SessionClosed";
        case TransportErrc::unreachable: return "Unreachable";
    }
    return "?";
}

InboxSession::InboxSession(Clock& clock, Endpoint peer, DelayFn delay)
    : clock_(clock), cond_(clock), peer_(std::move(peer)), delay_(std::move(delay)) {}

void InboxSession::push_line(std::string line) {
    {
        std::lock_guard<std::mutex> g(mu_);
        if (closed_) return;
        TimePoint ready = clock_.now();
        if (delay_) {
            auto d = delay_();
            if (d.count() > 0) ready = ready + d;
        }
        // Delays never reorder: visibility is monotone within the session.
        if (ready < last_ready_) ready = last_ready_;
        last_ready_ = ready;
        inbox_.push_back({std::move(line), ready});
    }
    cond_.notify_all();
}

void InboxSession::mark_remote_closed() {
    {
        std::lock_guard<std::mutex> g(mu_);
        remote_closed_ = true;
    }
    cond_.notify_all();
}

std::string InboxSession::recv(std::chrono::milliseconds timeout) {
    std::unique_lock<std::mutex> lk(mu_);
    TimePoint deadline = clock_.now() + timeout;
    for (;;) {
        auto ready = [&] {
            return closed_ || (!inbox_.empty() && inbox_.front().ready_at <= clock_.now()) ||
                   (remote_closed_ && inbox_.empty());
        };
        // Wake at the earliest of: caller deadline, front entry visibility.
        TimePoint wake = deadline;
        if (!inbox_.empty() && inbox_.front().ready_at < wake) {
            wake = inbox_.front().ready_at;
        }
        if (!cond_.wait_until(lk, wake, ready)) {
            if (clock_.now() >= deadline) {
                throw_transport(TransportErrc::timeout, "recv deadline");
            }
            continue;  // woken for an entry becoming visible
        }
        if (closed_) {
            throw_transport(TransportErrc::session_closed, "session closed locally");
        }
        if (!inbox_.empty() && inbox_.front().ready_at <= clock_.now()) {
            auto line = std::move(inbox_.front().line);
            inbox_.pop_front();
            return line;
        }
        if (remote_closed_ && inbox_.empty()) {
            throw_transport(TransportErrc::session_closed, "peer closed");
        }
    }
}

void InboxSession::send(std::string_view line) {
    {
        std::lock_guard<std::mutex> g(mu_);
        if (closed_ || remote_closed_) {
            throw_transport(TransportErrc::session_closed, "send on closed session");
        }
    }
    transmit(line);
}

void InboxSession::close() {
    {
        std::lock_guard<std::mutex> g(mu_);
        if (closed_) return;
        closed_ = true;
    }
    cond_.notify_all();
    on_close();
}

bool InboxSession::is_open() const {
    std::lock_guard<std::mutex> g(mu_);
    return !closed_ && !remote_closed_;
}

Endpoint InboxSession::peer() const {
    return peer_;
}

}  // namespace caddot::transport
