#pragma once

#include <atomic>
#include <deque>
#include <fstream>
#include <memory>
#include <thread>

#include "caddot/plugin/catalog.hpp"
#include "caddot/protocol/message.hpp"
#include "caddot/registry/planner.hpp"
#include "caddot/registry/store.hpp"
#include "caddot/transport/tcp.hpp"
#include "caddot/transport/transport.hpp"

namespace caddot::registry {

struct RegistryConfig {
    std::string host = "127.0.0.1";
    int api_port = 0;   // 0 = ephemeral
    int sink_port = 0;
    std::string run_dir;  // append-only logs land here; empty disables them
    std::uint64_t token_seed = 0x7061c3;
};

struct Registration {
    std::string regid;
    std::string token;
};

struct StoredBatch {
    std::string sensor_id;
    int size = 0;
    TimePoint at;
};

struct StoredReading {
    protocol::Reading reading;
    TimePoint arrived_at;
};

// ── RegistryService ──────────────────────────────────────────────────────────
//
// The cloud-middleware stand-in. Serves the line-based registry API on one
// TCP port (identify, find-plugin, register, plan, context, schedule
// publish/fetch, direct-connect watch, relay, reading counts) and the
// authenticated data sink on another. Record updates are serialized; the
// reading store takes concurrent appenders.

class RegistryService {
public:
    RegistryService(transport::Transport& net, RegistryConfig cfg, Store store,
                    plugin::Catalog catalog);
    ~RegistryService();

    void start();
    void stop();

    transport::Endpoint api_endpoint() const;
    transport::Endpoint sink_endpoint() const;

    // Operations (the wire handlers call straight into these).
    std::variant<SensorRecord, protocol::Err> identify(
        const protocol::SensorIdentity& identity) const;
    std::variant<plugin::AdapterDescriptor, protocol::Err> find_plugin(
        const std::string& id) const;
    std::variant<Registration, protocol::Err> register_sensor(
        const std::string& id, const protocol::SensorProfile& profile,
        const protocol::SensingStrategy& strategy);
    std::variant<protocol::SensingStrategy, protocol::Err> plan(const std::string& id) const;

    void set_context(const Context& context);
    void set_peer_status(const std::string& id, PeerStatus status);
    Context context() const;

    void publish_schedule(const std::string& path, const std::string& user,
                          const std::string& pass, const std::string& text);
    std::variant<std::string, protocol::Err> serve_schedule(const std::string& path,
                                                            const std::string& user,
                                                            const std::string& pass) const;

    std::variant<std::monostate, protocol::Err> ingest_reading(const std::string& token,
                                                               const protocol::Reading& r);

    // Sink observability.
    std::optional<TimePoint> direct_connected_at(const std::string& id) const;
    // Auth generation: bumped on every successful sink authentication. Waits
    // until the generation reaches min_gen (or timeout); returns the current
    // generation.
    long wait_direct_gen(const std::string& id, long min_gen,
                         std::chrono::milliseconds timeout);
    bool wait_direct(const std::string& id, std::chrono::milliseconds timeout);
    std::vector<StoredReading> readings_for(const std::string& id) const;
    std::vector<StoredBatch> batches_for(const std::string& id) const;
    std::vector<StoredReading> all_readings() const;
    long rejected_count() const;
    bool sink_attached(const std::string& id) const;

    // Sends a raw line to a directly connected sensor and returns its reply.
    std::variant<std::string, protocol::Err> relay(const std::string& id,
                                                   const std::string& line,
                                                   std::chrono::milliseconds timeout);

    std::optional<SensorRecord> record(const std::string& id) const;

private:
    struct SinkConn;

    void api_accept_loop();
    void sink_accept_loop();
    void serve_api(std::shared_ptr<transport::Session> session);
    void serve_sink(std::shared_ptr<transport::Session> session);
    std::string dispatch_api(const std::string& line);
    std::string fresh_token();
    void track(transport::Session* s, bool add);
    void add_thread(std::thread t);

    transport::Transport& net_;
    Clock& clock_;
    RegistryConfig cfg_;

    mutable std::mutex mu_;  // store, context, schedules, tokens
    Store store_;
    plugin::Catalog catalog_;
    Context context_;
    struct PublishedFile {
        std::string user;
        std::string pass;
        std::string text;
    };
    std::map<std::string, PublishedFile> files_;
    std::mt19937_64 token_rng_;
    int next_regid_ = 1;

    mutable std::mutex sink_mu_;
    ClockCond sink_cond_;
    std::map<std::string, std::shared_ptr<SinkConn>> sinks_;
    std::map<std::string, TimePoint> direct_at_;
    std::map<std::string, long> direct_gen_;
    std::vector<StoredReading> readings_;
    std::vector<StoredBatch> batches_;
    std::atomic<long> rejected_{0};

    std::mutex io_mu_;
    std::ofstream readings_log_;
    std::ofstream registrations_log_;
    std::ofstream rejects_log_;

    std::unique_ptr<transport::TcpListener> api_listener_;
    std::unique_ptr<transport::TcpListener> sink_listener_;
    std::atomic<bool> stopping_{false};
    std::mutex threads_mu_;
    std::vector<std::thread> threads_;
    std::mutex sessions_mu_;
    std::vector<transport::Session*> live_sessions_;
};

// ── Strategy wire form ───────────────────────────────────────────────────────
//
//   [STR][acq=<mode>][rate=<s>][freq=<s>]([sched=<schedule text>])

std::string encode_strategy(const protocol::SensingStrategy& s);
std::variant<protocol::SensingStrategy, protocol::WireError> decode_strategy(
    std::string_view line);

}  // namespace caddot::registry
