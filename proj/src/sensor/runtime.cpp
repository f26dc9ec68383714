#include "caddot/sensor/runtime.hpp"

#include "caddot/protocol/wire.hpp"

namespace caddot::sensor {

using namespace caddot::protocol;
using namespace caddot::transport;
using namespace std::chrono_literals;

SensorRuntime::SensorRuntime(SensorSpec spec, Transport& net, SensorNetConfig cfg)
    : spec_(std::move(spec)), net_(net), cfg_(cfg), clock_(net.clock()), core_(spec_),
      engine_(spec_, cfg.calendar), stop_cond_(net.clock()) {}

SensorRuntime::~SensorRuntime() {
    stop();
    if (thread_.joinable()) thread_.join();
}

void SensorRuntime::start() {
    thread_ = std::thread([this] { run(); });
}

void SensorRuntime::stop() {
    {
        std::lock_guard<std::mutex> g(life_mu_);
        if (stop_) return;
        stop_ = true;
        if (live_session_) live_session_->close();
        if (sink_) sink_->close();
    }
    stop_cond_.notify_all();
}

bool SensorRuntime::stopping() const {
    std::lock_guard<std::mutex> g(life_mu_);
    return stop_;
}

// Sleeps in virtual time but wakes early on stop(); returns false on stop.
bool SensorRuntime::interruptible_sleep(std::chrono::milliseconds d) {
    std::unique_lock<std::mutex> lk(life_mu_);
    stop_cond_.wait_until(lk, clock_.now() + d, [&] { return stop_; });
    return !stop_;
}

Mode SensorRuntime::mode() const {
    std::lock_guard<std::mutex> g(core_mu_);
    return core_.mode();
}

SensingStrategy SensorRuntime::strategy() const {
    std::lock_guard<std::mutex> g(core_mu_);
    return core_.strategy();
}

std::optional<Schedule> SensorRuntime::schedule() const {
    std::lock_guard<std::mutex> g(core_mu_);
    return core_.schedule();
}

void SensorRuntime::run() {
    Clock::Participation participation(clock_);
    auto spawn = clock_.now();
    auto boot = spec_.boot_delay + net_.sample_boot_delay();
    if (!interruptible_sleep(boot)) return;
    boot_ms_ = (clock_.now() - spawn).count();

    if (spec_.program == ProgramDesign::spd) {
        run_spd();
    } else {
        run_cpd();
    }
}

void SensorRuntime::run_cpd() {
    while (!stopping()) {
        {
            std::lock_guard<std::mutex> g(core_mu_);
            if (core_.mode() == Mode::booting) core_.enter(Mode::seeking);
            if (core_.mode() == Mode::direct) core_.enter(Mode::seeking);
        }
        auto seek_start = clock_.now();
        std::optional<Endpoint> target;
        while (!stopping()) {
            auto found = net_.scan(cfg_.kind, cfg_.scan_window, cfg_.announce_port, spec_.zone);
            if (!found.empty()) {
                target = found.front();  // first beacon heard wins
                break;
            }
            if (!interruptible_sleep(cfg_.rescan_interval)) return;
        }
        if (!target) return;
        auto heard = clock_.now();

        std::unique_ptr<Session> session;
        try {
            session = net_.connect(*target);
        } catch (const TransportError&) {
            continue;  // beacon gone; seek again
        }
        auto connected = clock_.now();

        {
            std::lock_guard<std::mutex> g(core_mu_);
            core_.set_telemetry(boot_ms_, (heard - seek_start).count(),
                                (connected - heard).count());
            core_.on_new_connection();
            if (core_.mode() == Mode::seeking) core_.enter(Mode::listening);
        }
        {
            std::lock_guard<std::mutex> g(life_mu_);
            if (stop_) return;
            live_session_ = session.get();
        }
        auto action = session_loop(*session);
        {
            std::lock_guard<std::mutex> g(life_mu_);
            live_session_ = nullptr;
        }
        if (action == Action::direct) {
            session->close();
            session.reset();
            // A re-C8 replaces the sink connection and restarts the loop.
            while (!stopping()) {
                bool have_sink;
                {
                    std::lock_guard<std::mutex> g(life_mu_);
                    have_sink = sink_ != nullptr;
                }
                if (!have_sink) break;
                if (direct_loop() != Action::direct) break;
            }
        }
    }
}

SensorRuntime::Action SensorRuntime::session_loop(Session& session) {
    for (;;) {
        if (stopping()) return Action::lost;
        std::optional<TimePoint> event;
        {
            std::lock_guard<std::mutex> g(core_mu_);
            event = engine_.armed() ? engine_.next_event() : std::nullopt;
        }
        std::string line;
        try {
            auto now = clock_.now();
            auto budget = event ? std::chrono::milliseconds(std::max<std::int64_t>(
                                      0, event->ms - now.ms))
                                : 3600'000ms;
            line = session.recv(budget);
        } catch (const TransportError& e) {
            if (e.code() == TransportErrc::timeout) {
                std::vector<std::vector<Reading>> batches;
                bool expired = false;
                {
                    std::lock_guard<std::mutex> g(core_mu_);
                    batches = engine_.advance_to(clock_.now());
                    if (engine_.expired()) {
                        core_.temp_expired();
                        engine_.disarm();
                        rearm_standing(clock_.now());
                        expired = true;
                    }
                }
                (void)expired;
                try {
                    send_batches(session, true, std::move(batches));
                } catch (const TransportError&) {
                    return Action::lost;
                }
                continue;
            }
            return Action::lost;  // closed by peer, configurator, or churn
        }

        if (cfg_.line_tap) cfg_.line_tap(spec_.identity.id, "in", line);
        SensorCore::Result result;
        {
            std::lock_guard<std::mutex> g(core_mu_);
            result = core_.handle_line(line, clock_.now());
        }
        auto action = handle_result(session, std::move(result));
        if (action != Action::none) return action;
    }
}

// Executes replies and effects. Past Action::none the caller must not touch
// the session again: a go_direct may have replaced or closed it.
SensorRuntime::Action SensorRuntime::handle_result(Session& session,
                                                   SensorCore::Result result) {
    try {
        for (const auto& reply : result.replies) {
            if (cfg_.line_tap) cfg_.line_tap(spec_.identity.id, "out", reply);
            session.send(reply);
        }
    } catch (const TransportError&) {
        return Action::lost;
    }

    if (result.effects.fetch) {
        auto outcome = do_fetch(*result.effects.fetch);
        SensorCore::Result fr;
        {
            std::lock_guard<std::mutex> g(core_mu_);
            fr = core_.complete_fetch(outcome);
        }
        auto action = handle_result(session, std::move(fr));
        if (action != Action::none) return action;
    }

    if (result.effects.start_temp_push) {
        std::lock_guard<std::mutex> g(core_mu_);
        auto now = clock_.now();
        const auto& tp = *result.effects.start_temp_push;
        engine_.arm_interval(now, tp.rate, tp.freq,
                             now + std::chrono::duration_cast<std::chrono::milliseconds>(
                                       tp.duration));
    }

    if (result.effects.rearm) {
        std::lock_guard<std::mutex> g(core_mu_);
        rearm_standing(clock_.now());
    }

    if (result.effects.go_direct) {
        if (try_sink_connect()) {
            {
                std::lock_guard<std::mutex> g(core_mu_);
                core_.confirm_direct();
                rearm_standing(clock_.now());
            }
            return Action::direct;
        }
        std::string err;
        {
            std::lock_guard<std::mutex> g(core_mu_);
            err = core_.direct_failed();
        }
        try {
            session.send(err);
        } catch (const TransportError&) {
            return Action::lost;
        }
        return Action::none;
    }

    bool pre_direct;
    {
        std::lock_guard<std::mutex> g(core_mu_);
        pre_direct = core_.mode() != Mode::direct;
    }
    if (result.effects.close_connection && pre_direct) {
        session.close();
        return Action::reseek;
    }
    return Action::none;
}

// Standing engine state: schedule-gated when a schedule is active, idle for
// pull/stop.
void SensorRuntime::rearm_standing(TimePoint now) {
    if (core_.strategy().acquisition == Acquisition::push_schedule && core_.schedule() &&
        (core_.mode() == Mode::push_scheduled || core_.mode() == Mode::direct)) {
        engine_.arm_schedule(now, *core_.schedule());
    } else if (core_.mode() != Mode::push_temp) {
        engine_.disarm();
    }
}

void SensorRuntime::send_batches(Session& session, bool translate,
                                 std::vector<std::vector<Reading>> batches) {
    for (auto& batch : batches) {
        for (auto& reading : batch) {
            auto line = translate ? core_.codec().outbound(Message{reading}, false)
                                  : encode_message(Message{reading});
            session.send(line);
        }
        if (!translate) {
            // Batch trailer so the sink can account transmissions, not just
            // readings.
            session.send(join_segments({"BAT", "id=" + spec_.identity.id,
                                        "n=" + std::to_string(batch.size()),
                                        "ts=" + std::to_string(clock_.now().ms)}));
        }
    }
}

bool SensorRuntime::try_sink_connect() {
    std::optional<NetworkSettings> net;
    {
        std::lock_guard<std::mutex> g(core_mu_);
        net = core_.net();
    }
    if (!net) return false;
    auto delay = net_.sample_sink_connect_delay();
    if (delay.count() > 0 && !interruptible_sleep(delay)) return false;

    std::unique_ptr<Session> sink;
    try {
        sink = net_.connect(
            {TransportKind::tcp, net->sink_address + ":" + std::to_string(net->sink_port)});
        sink->send(join_segments({"HEL", "id=" + spec_.identity.id,
                                  "token=" + net->credential_token}));
        auto reply = sink->recv(5000ms);
        auto msg = decode_message(reply);
        if (is_error(msg) || !std::holds_alternative<Ack>(std::get<Message>(msg))) {
            sink->close();
            return false;
        }
    } catch (const TransportError&) {
        return false;
    }
    std::unique_ptr<Session> retired;
    {
        std::lock_guard<std::mutex> g(life_mu_);
        if (stop_) {
            sink->close();
            return false;
        }
        retired = std::move(sink_);  // re-C8 replaces the sink connection
        sink_ = std::move(sink);
    }
    if (retired) retired->close();
    return true;
}

SensorRuntime::Action SensorRuntime::direct_loop() {
    for (;;) {
        if (stopping()) return Action::lost;
        std::optional<TimePoint> event;
        {
            std::lock_guard<std::mutex> g(core_mu_);
            event = engine_.armed() ? engine_.next_event() : std::nullopt;
        }
        std::string line;
        try {
            auto now = clock_.now();
            auto budget = event ? std::chrono::milliseconds(std::max<std::int64_t>(
                                      0, event->ms - now.ms))
                                : 3600'000ms;
            line = sink_->recv(budget);
        } catch (const TransportError& e) {
            if (e.code() == TransportErrc::timeout) {
                std::vector<std::vector<Reading>> batches;
                {
                    std::lock_guard<std::mutex> g(core_mu_);
                    batches = engine_.advance_to(clock_.now());
                    if (engine_.expired()) {
                        core_.temp_expired();
                        engine_.disarm();
                        rearm_standing(clock_.now());
                    }
                }
                try {
                    send_batches(*sink_, false, std::move(batches));
                } catch (const TransportError&) {
                    break;
                }
                continue;
            }
            break;  // sink connection lost
        }

        // Relayed command traffic arrives on the sink connection. Inbound
        // notifications (acks/errors from the sink itself) are dropped.
        auto split = split_segments(line);
        if (!std::holds_alternative<WireError>(split)) {
            const auto& head = std::get<std::vector<std::string>>(split)[0];
            if (head == "ACK" || head == "ERR") continue;
        }
        SensorCore::Result result;
        {
            std::lock_guard<std::mutex> g(core_mu_);
            result = core_.handle_line(line, clock_.now());
        }
        auto action = handle_result(*sink_, std::move(result));
        if (action == Action::direct) return Action::direct;  // sink replaced
        if (action != Action::none) break;
    }
    std::unique_ptr<Session> dead;
    {
        std::lock_guard<std::mutex> g(life_mu_);
        dead = std::move(sink_);
    }
    if (dead) dead->close();
    return Action::lost;
}

std::variant<Schedule, Err> SensorRuntime::do_fetch(const FetchSettings& settings) {
    auto delay = net_.sample_fetch_delay();
    if (delay.count() > 0 && !interruptible_sleep(delay)) {
        return Err{ErrCode::fetch_unreachable, "departed"};
    }
    try {
        auto session = net_.connect({TransportKind::tcp, settings.server});
        session->send(join_segments({"FCH", "path=" + settings.path,
                                     "user=" + settings.username,
                                     "pass=" + settings.password}));
        auto reply = session->recv(5000ms);
        session->close();
        auto split = split_segments(reply);
        if (std::holds_alternative<WireError>(split)) {
            return Err{ErrCode::fetch_unreachable, "garbled fetch reply"};
        }
        const auto& segs = std::get<std::vector<std::string>>(split);
        if (segs[0] == "FIL" && segs.size() == 2) {
            auto parsed = parse_schedule(segs[1]);
            if (auto* err = std::get_if<ScheduleError>(&parsed)) {
                return Err{ErrCode::syntax_error, err->detail};
            }
            return std::get<Schedule>(parsed);
        }
        if (segs[0] == "ERR" && segs.size() == 3) {
            auto code = err_code_from_string(segs[1]);
            return Err{code.value_or(ErrCode::fetch_unreachable), segs[2]};
        }
        return Err{ErrCode::fetch_unreachable, "unexpected fetch reply"};
    } catch (const TransportError&) {
        return Err{ErrCode::fetch_unreachable, settings.server};
    }
}

// ── SPD ──────────────────────────────────────────────────────────────────────
//
// The degenerate firmware: connect and push hardcoded data lines; never
// answer anything.

void SensorRuntime::run_spd() {
    ValueWalk walk(spec_.phenomena.front().seed);
    while (!stopping()) {
        std::optional<Endpoint> target;
        while (!stopping()) {
            auto found = net_.scan(cfg_.kind, cfg_.scan_window, cfg_.announce_port, spec_.zone);
            if (!found.empty()) {
                target = found.front();
                break;
            }
            if (!interruptible_sleep(cfg_.rescan_interval)) return;
        }
        if (!target) return;
        std::unique_ptr<Session> session;
        try {
            session = net_.connect(*target);
        } catch (const TransportError&) {
            continue;
        }
        {
            std::lock_guard<std::mutex> g(life_mu_);
            if (stop_) return;
            live_session_ = session.get();
        }
        for (;;) {
            try {
                (void)session->recv(10'000ms);  // discard anything inbound
            } catch (const TransportError& e) {
                if (e.code() != TransportErrc::timeout) break;
                try {
                    session->send(join_segments(
                        {"DTA", spec_.identity.id, format_value(walk.next())}));
                } catch (const TransportError&) {
                    break;
                }
            }
            if (stopping()) break;
        }
        {
            std::lock_guard<std::mutex> g(life_mu_);
            live_session_ = nullptr;
        }
    }
}

// ── FleetRuntime ─────────────────────────────────────────────────────────────

SensorRuntime& FleetRuntime::spawn_sensor(const SensorSpec& spec) {
    std::lock_guard<std::mutex> g(mu_);
    if (sensors_.count(spec.identity.id) > 0) {
        throw FleetError("DuplicateId: " + spec.identity.id);
    }
    auto runtime = std::make_unique<SensorRuntime>(spec, net_, cfg_);
    auto* ptr = runtime.get();
    sensors_[spec.identity.id] = std::move(runtime);
    ptr->start();
    return *ptr;
}

SensorRuntime* FleetRuntime::find(const std::string& id) {
    std::lock_guard<std::mutex> g(mu_);
    auto it = sensors_.find(id);
    return it == sensors_.end() ? nullptr : it->second.get();
}

void FleetRuntime::stop_sensor(const std::string& id) {
    SensorRuntime* s = find(id);
    if (s) s->stop();
}

void FleetRuntime::stop_all() {
    std::vector<SensorRuntime*> all_sensors = all();
    for (auto* s : all_sensors) s->stop();
    std::lock_guard<std::mutex> g(mu_);
    sensors_.clear();  // joins in destructors
}

std::vector<SensorRuntime*> FleetRuntime::all() {
    std::lock_guard<std::mutex> g(mu_);
    std::vector<SensorRuntime*> out;
    for (auto& [id, s] : sensors_) out.push_back(s.get());
    return out;
}

}  // namespace caddot::sensor
