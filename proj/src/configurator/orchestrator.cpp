#include "caddot/configurator/orchestrator.hpp"

#include "caddot/protocol/command.hpp"
#include "caddot/protocol/message.hpp"

namespace caddot::configurator {

using namespace caddot::protocol;
using namespace caddot::transport;
using namespace std::chrono_literals;

// Sessions for one sensor, appended as the sensor (re)connects. Dialect C
// sensors reconnect once per command; the pipeline consumes sessions in
// arrival order.
class Orchestrator::RoutedLink final : public plugin::SessionLink {
public:
    explicit RoutedLink(Clock& clock) : clock_(clock), cond_(clock) {}

    transport::Session& session() override {
        std::unique_lock<std::mutex> lk(mu_);
        cond_.wait(lk, [&] { return !sessions_.empty() || dead_; });
        if (sessions_.empty()) {
            throw plugin::AdapterError(plugin::AdapterErrc::link_lost, "routing stopped");
        }
        return *sessions_[current_];
    }

    transport::Session& await_replacement(std::chrono::milliseconds timeout) override {
        std::unique_lock<std::mutex> lk(mu_);
        bool ok = cond_.wait_until(lk, clock_.now() + timeout, [&] {
            return sessions_.size() > current_ + 1 || dead_;
        });
        if (dead_ || !ok || sessions_.size() <= current_ + 1) {
            throw plugin::AdapterError(plugin::AdapterErrc::timeout,
                                       "sensor did not reconnect");
        }
        ++current_;
        return *sessions_[current_];
    }

    void attach(std::unique_ptr<transport::Session> s) {
        {
            std::lock_guard<std::mutex> g(mu_);
            sessions_.push_back(std::move(s));
        }
        cond_.notify_all();
    }

    void kill() {
        {
            std::lock_guard<std::mutex> g(mu_);
            dead_ = true;
            for (auto& s : sessions_) s->close();
        }
        cond_.notify_all();
    }

private:
    Clock& clock_;
    std::mutex mu_;
    ClockCond cond_;
    std::vector<std::unique_ptr<transport::Session>> sessions_;
    std::size_t current_ = 0;
    bool dead_ = false;
};

Orchestrator::Orchestrator(Transport& net, OrchestratorConfig cfg)
    : net_(net), clock_(net.clock()), cfg_(std::move(cfg)), traces_cond_(net.clock()),
      slots_cond_(net.clock()), stop_cond_(net.clock()) {}

Orchestrator::~Orchestrator() {
    stop();
}

void Orchestrator::start() {
    for (const auto& spec : cfg_.beacons) {
        beacons_.push_back(net_.open_beacon(spec));
        auto* beacon = beacons_.back().get();
        add_thread(std::thread([this, beacon, spec] { arrival_loop(*beacon, spec); }));
    }
    if (cfg_.mobile && !cfg_.mobile->zones.empty()) {
        add_thread(std::thread([this] { mobile_loop(); }));
    }
}

void Orchestrator::stop() {
    if (stopping_.exchange(true)) return;
    for (auto& b : beacons_) b->close();
    {
        std::lock_guard<std::mutex> g(mu_);
        for (auto& [id, link] : in_flight_) link->kill();
        for (auto& s : abandoned_) s->close();
    }
    stop_cond_.notify_all();
    slots_cond_.notify_all();
    for (;;) {
        std::vector<std::thread> batch;
        {
            std::lock_guard<std::mutex> g(threads_mu_);
            batch.swap(threads_);
        }
        if (batch.empty()) break;
        for (auto& t : batch) {
            if (t.joinable()) t.join();
        }
    }
}

void Orchestrator::add_thread(std::thread t) {
    std::lock_guard<std::mutex> g(threads_mu_);
    threads_.push_back(std::move(t));
}

void Orchestrator::mobile_loop() {
    Clock::Participation participation(clock_);
    std::size_t at = 0;
    std::unique_lock<std::mutex> lk(stop_mu_);
    while (!stopping_) {
        const auto& zones = cfg_.mobile->zones;
        for (auto& b : beacons_) {
            try {
                b->set_zone(zones[at % zones.size()]);
            } catch (const TransportError&) {
                // Zone already occupied (e.g. by another beacon); skip this stop.
            }
        }
        ++at;
        stop_cond_.wait_until(lk, clock_.now() + cfg_.mobile->dwell,
                              [&] { return stopping_.load(); });
    }
}

void Orchestrator::arrival_loop(Beacon& beacon, const BeaconSpec& spec) {
    Clock::Participation participation(clock_);
    while (!stopping_) {
        std::unique_ptr<Session> session;
        try {
            session = beacon.accept(60'000ms);
        } catch (const TransportError& e) {
            if (e.code() == TransportErrc::timeout) continue;
            return;  // beacon closed
        }
        auto* raw = session.release();
        add_thread(std::thread([this, raw, spec] {
            Clock::Participation p(clock_);
            route(std::unique_ptr<Session>(raw), spec);
        }));
    }
}

// Extract phase: [WHO] -> M1, retried; then hand over to a new pipeline or a
// waiting one.
void Orchestrator::route(std::unique_ptr<Session> session, const BeaconSpec& spec) {
    TimePoint who_sent = clock_.now();
    std::optional<Identity> ident;

    for (int attempt = 0; attempt <= cfg_.extract_retries && !stopping_; ++attempt) {
        try {
            session->send(encode_command(Command{Who{}}));
        } catch (const TransportError&) {
            return;  // arrival vanished before extraction
        }
        auto deadline = clock_.now() + cfg_.extract_timeout;
        while (clock_.now() < deadline) {
            std::string line;
            try {
                auto budget = std::chrono::milliseconds(deadline.ms - clock_.now().ms);
                line = session->recv(budget);
            } catch (const TransportError& e) {
                if (e.code() == TransportErrc::timeout) break;
                return;  // departed mid-extract; nothing to report yet
            }
            auto msg = decode_message(line);
            if (!is_error(msg)) {
                if (auto* m1 = std::get_if<Identity>(&std::get<Message>(msg))) {
                    ident = *m1;
                    break;
                }
            }
            // Anything else (SPD chatter, stray pushes) is ignored.
        }
        if (ident) break;
        if (attempt < cfg_.extract_retries) clock_.sleep_for(250ms);
    }

    if (!ident) {
        // Unresponsive to the universal handshake: record the failure and
        // leave the session parked so the device does not loop re-arrivals.
        TraceBuilder builder("unknown@" + session->peer().address,
                             std::string(to_string(spec.kind)), clock_);
        builder.record_extract(who_sent, clock_.now());
        auto trace = builder.fail_at(Step::extract, "ExtractTimeout");
        trace.failed_step = static_cast<int>(Step::extract);
        add_trace(std::move(trace));
        std::lock_guard<std::mutex> g(mu_);
        abandoned_.push_back(std::move(session));
        return;
    }

    TimePoint m1_at = clock_.now();

    // Re-arrival of a sensor whose pipeline is waiting (dialect C)?
    {
        std::lock_guard<std::mutex> g(mu_);
        auto it = in_flight_.find(ident->who.id);
        if (it != in_flight_.end()) {
            it->second->attach(std::move(session));
            return;
        }
    }

    Arrival arrival;
    arrival.identity = ident->who;
    arrival.who_sent = who_sent;
    arrival.m1_received = m1_at;
    for (const auto& [k, v] : ident->extras) {
        try {
            if (k == "boot_ms") arrival.boot_ms = std::stoll(v);
            if (k == "scan_ms") arrival.scan_ms = std::stoll(v);
            if (k == "conn_ms") arrival.conn_ms = std::stoll(v);
        } catch (const std::exception&) {
        }
    }

    auto link = std::make_shared<RoutedLink>(clock_);
    link->attach(std::move(session));
    {
        std::lock_guard<std::mutex> g(mu_);
        in_flight_[arrival.identity.id] = link;
    }

    TraceBuilder builder(arrival.identity.id, std::string(to_string(spec.kind)), clock_);
    builder.sensor_reported(arrival.boot_ms, arrival.scan_ms, arrival.conn_ms, who_sent);
    builder.record_extract(who_sent, m1_at);

    run_session(std::move(arrival), link, spec, std::move(builder));
}

void Orchestrator::run_session(Arrival arrival, std::shared_ptr<RoutedLink> link,
                               const BeaconSpec& spec, TraceBuilder builder) {
    // Parallelism limit: the slot covers the adapter session, steps 5-10.
    {
        std::unique_lock<std::mutex> lk(slots_mu_);
        slots_cond_.wait(lk, [&] {
            return slots_used_ < cfg_.parallelism || stopping_.load();
        });
        if (stopping_) return;
        ++slots_used_;
    }
    int now_open = ++open_sessions_;
    int prev_max = max_open_sessions_.load();
    while (now_open > prev_max &&
           !max_open_sessions_.compare_exchange_weak(prev_max, now_open)) {
    }

    auto trace = run_configuration(arrival, *link, cfg_.pipeline, std::move(builder), clock_);

    --open_sessions_;
    {
        std::lock_guard<std::mutex> g(slots_mu_);
        --slots_used_;
    }
    slots_cond_.notify_all();
    {
        std::lock_guard<std::mutex> g(mu_);
        in_flight_.erase(arrival.identity.id);
    }
    add_trace(std::move(trace));
}

void Orchestrator::add_trace(SessionTrace trace) {
    {
        std::lock_guard<std::mutex> g(mu_);
        traces_.push_back(std::move(trace));
    }
    traces_cond_.notify_all();
}

std::vector<SessionTrace> Orchestrator::traces() const {
    std::lock_guard<std::mutex> g(mu_);
    return traces_;
}

std::size_t Orchestrator::trace_count() const {
    std::lock_guard<std::mutex> g(mu_);
    return traces_.size();
}

bool Orchestrator::wait_traces(std::size_t n, std::chrono::milliseconds timeout) {
    std::unique_lock<std::mutex> lk(mu_);
    return traces_cond_.wait_until(lk, clock_.now() + timeout,
                                   [&] { return traces_.size() >= n; });
}

SessionTrace Orchestrator::reconfigure(const std::string& sensor_id) {
    std::string transport_name =
        cfg_.beacons.empty() ? "tcp" : std::string(to_string(cfg_.beacons[0].kind));
    auto trace = run_reconfiguration(sensor_id, transport_name, cfg_.pipeline, clock_);
    add_trace(trace);
    return trace;
}

std::vector<std::string> Orchestrator::beacon_zones() const {
    std::vector<std::string> zones;
    for (const auto& b : beacons_) {
        auto ep = b->session_endpoint();
        if (ep.kind == TransportKind::channel) zones.push_back(ep.address);
    }
    return zones;
}

}  // namespace caddot::configurator
