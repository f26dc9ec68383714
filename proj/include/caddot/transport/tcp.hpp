#pragma once

#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "caddot/clock.hpp"
#include "caddot/transport/session.hpp"

namespace caddot::transport {

// Line-oriented session listener over a TCP accept socket. An internal
// thread accepts connections and queues sessions for accept().
class TcpListener {
public:
    TcpListener(Clock& clock, const std::string& host, int port, DelayFn per_message = {});
    ~TcpListener();

    std::unique_ptr<Session> accept(std::chrono::milliseconds timeout);
    Endpoint local() const;
    void close();

private:
    struct Impl;
    std::shared_ptr<Impl> impl_;
};

std::unique_ptr<Session> tcp_connect(Clock& clock, const std::string& host, int port,
                                     DelayFn per_message = {});

}  // namespace caddot::transport
