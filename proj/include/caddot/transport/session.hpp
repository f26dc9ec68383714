#pragma once

#include <chrono>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>

#include "caddot/clock.hpp"
#include "caddot/transport/endpoint.hpp"

namespace caddot::transport {

enum class TransportErrc {
    address_in_use,
    connection_refused,
    timeout,
    session_closed,
    unreachable,
};

std::string_view to_string(TransportErrc code);

class TransportError : public std::runtime_error {
public:
    TransportError(TransportErrc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    TransportErrc code() const { return code_; }

private:
    TransportErrc code_;
};

[[noreturn]] inline void throw_transport(TransportErrc code, const std::string& what) {
    throw TransportError(code, what);
}

// ── Session ──────────────────────────────────────────────────────────────────
//
// Full-duplex ordered exchange of newline-terminated lines. One logical task
// uses a session at a time; different sessions are independent.

class Session {
public:
    virtual ~Session() = default;

    // line must be newline-terminated. Throws session_closed after close().
    virtual void send(std::string_view line) = 0;

    // Next inbound line (with its newline). Throws timeout at the deadline and
    // session_closed once the session is closed and drained.
    virtual std::string recv(std::chrono::milliseconds timeout) = 0;

    virtual void close() = 0;
    virtual bool is_open() const = 0;

    virtual Endpoint peer() const = 0;
};

// Samples a receive-side delay for one message; zero when latency emulation
// is off.
using DelayFn = std::function<std::chrono::milliseconds()>;

// ── InboxSession ─────────────────────────────────────────────────────────────
//
// Base class implementing recv() over a queue that I/O threads (or an
// in-process peer) feed via push_line(). Injected latency only makes entries
// visible later; order is always preserved.

class InboxSession : public Session {
public:
    InboxSession(Clock& clock, Endpoint peer, DelayFn delay = {});

    std::string recv(std::chrono::milliseconds timeout) override;
    void close() override;
    bool is_open() const override;
    Endpoint peer() const override;

    // Called by the transport's reader side.
    void push_line(std::string line);
    void mark_remote_closed();

    void send(std::string_view line) override;

protected:
    // Sends one line to the peer; called with no locks held.
    virtual void transmit(std::string_view line) = 0;
    // Transport-specific teardown, called once from close().
    virtual void on_close() {}

    Clock& clock_;

private:
    struct Entry {
        std::string line;
        TimePoint ready_at;
    };

    mutable std::mutex mu_;
    ClockCond cond_;
    std::deque<Entry> inbox_;
    TimePoint last_ready_{0};
    Endpoint peer_;
    DelayFn delay_;
    bool closed_ = false;
    bool remote_closed_ = false;
};

}  // namespace caddot::transport
