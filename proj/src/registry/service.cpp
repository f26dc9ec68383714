#include "caddot/registry/service.hpp"

#include <algorithm>
#include <filesystem>
#include <sstream>

#include "caddot/protocol/wire.hpp"

namespace caddot::registry {

using namespace caddot::protocol;
using namespace caddot::transport;
using namespace std::chrono_literals;

namespace {

std::map<std::string, std::string> kv_of(const std::vector<std::string>& segs,
                                         std::size_t from) {
    std::map<std::string, std::string> out;
    for (std::size_t i = from; i < segs.size(); ++i) {
        auto eq = segs[i].find('=');
        if (eq == std::string::npos) continue;
        out.emplace(segs[i].substr(0, eq), segs[i].substr(eq + 1));
    }
    return out;
}

std::string get_or(const std::map<std::string, std::string>& kv, const std::string& key,
                   const std::string& fallback = {}) {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
}

std::string err_line(ErrCode code, const std::string& detail) {
    return encode_message(Message{Err{code, detail}});
}

std::string join_list(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& i : items) {
        if (!out.empty()) out += ';';
        out += i;
    }
    return out;
}

}  // namespace

std::string encode_strategy(const SensingStrategy& s) {
    std::vector<std::string> segs{"STR", "acq=" + std::string(to_string(s.acquisition)),
                                  "rate=" + std::to_string(s.sampling_rate.count()),
                                  "freq=" + std::to_string(s.comm_frequency.count())};
    if (s.schedule) segs.push_back("sched=" + render_schedule(*s.schedule));
    return join_segments(segs);
}

std::variant<SensingStrategy, WireError> decode_strategy(std::string_view line) {
    auto split = split_segments(line);
    if (auto* err = std::get_if<WireError>(&split)) return *err;
    const auto& segs = std::get<std::vector<std::string>>(split);
    if (segs.empty() || segs[0] != "STR") {
        return WireError{WireErrc::unknown_tag, "expected [STR]"};
    }
    auto kv = kv_of(segs, 1);
    SensingStrategy s;
    auto acq = acquisition_from_string(get_or(kv, "acq"));
    if (!acq) return WireError{WireErrc::bad_value, "bad acquisition"};
    s.acquisition = *acq;
    try {
        s.sampling_rate = std::chrono::seconds(std::stoll(get_or(kv, "rate", "0")));
        s.comm_frequency = std::chrono::seconds(std::stoll(get_or(kv, "freq", "0")));
    } catch (const std::exception&) {
        return WireError{WireErrc::bad_value, "bad rate/freq"};
    }
    if (s.sampling_rate.count() <= 0 || s.comm_frequency.count() <= 0) {
        return WireError{WireErrc::bad_value, "rates must be positive"};
    }
    if (kv.count("sched")) {
        auto parsed = parse_schedule(kv.at("sched"));
        if (std::holds_alternative<ScheduleError>(parsed)) {
            return WireError{WireErrc::bad_value, "bad embedded schedule"};
        }
        s.schedule = std::get<Schedule>(parsed);
    }
    return s;
}

// One authenticated sink connection.
struct RegistryService::SinkConn {
    explicit SinkConn(Clock& clock) : mailbox_cond(clock) {}

    std::shared_ptr<transport::Session> session;
    std::string token;
    std::mutex mu;
    ClockCond mailbox_cond;
    std::deque<std::string> mailbox;  // non-reading lines (relay replies)
    std::mutex relay_mu;              // one relay exchange at a time
};

RegistryService::RegistryService(Transport& net, RegistryConfig cfg, Store store,
                                 plugin::Catalog catalog)
    : net_(net), clock_(net.clock()), cfg_(std::move(cfg)), store_(std::move(store)),
      catalog_(std::move(catalog)), token_rng_(cfg_.token_seed), sink_cond_(net.clock()) {}

RegistryService::~RegistryService() {
    stop();
}

void RegistryService::start() {
    if (!cfg_.run_dir.empty()) {
        std::filesystem::create_directories(cfg_.run_dir);
        readings_log_.open(cfg_.run_dir + "/readings.log", std::ios::app);
        registrations_log_.open(cfg_.run_dir + "/registrations.log", std::ios::app);
        rejects_log_.open(cfg_.run_dir + "/rejects.log", std::ios::app);
    }
    api_listener_ = std::make_unique<TcpListener>(clock_, cfg_.host, cfg_.api_port);
    sink_listener_ = std::make_unique<TcpListener>(clock_, cfg_.host, cfg_.sink_port);
    add_thread(std::thread([this] { api_accept_loop(); }));
    add_thread(std::thread([this] { sink_accept_loop(); }));
}

void RegistryService::stop() {
    if (stopping_.exchange(true)) return;
    if (api_listener_) api_listener_->close();
    if (sink_listener_) sink_listener_->close();
    {
        std::lock_guard<std::mutex> g(sessions_mu_);
        for (auto* s : live_sessions_) s->close();
    }
    // Accept loops may still be enqueuing one last handler; drain until empty.
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

void RegistryService::add_thread(std::thread t) {
    std::lock_guard<std::mutex> g(threads_mu_);
    threads_.push_back(std::move(t));
}

Endpoint RegistryService::api_endpoint() const {
    return api_listener_->local();
}

Endpoint RegistryService::sink_endpoint() const {
    return sink_listener_->local();
}

void RegistryService::track(Session* s, bool add) {
    std::lock_guard<std::mutex> g(sessions_mu_);
    if (add) {
        live_sessions_.push_back(s);
    } else {
        live_sessions_.erase(std::remove(live_sessions_.begin(), live_sessions_.end(), s),
                             live_sessions_.end());
    }
}

void RegistryService::api_accept_loop() {
    while (!stopping_) {
        try {
            std::shared_ptr<Session> session = api_listener_->accept(60'000ms);
            add_thread(std::thread([this, session] { serve_api(session); }));
        } catch (const TransportError& e) {
            if (e.code() == TransportErrc::timeout) continue;
            break;
        }
    }
}

void RegistryService::sink_accept_loop() {
    while (!stopping_) {
        try {
            std::shared_ptr<Session> session = sink_listener_->accept(60'000ms);
            add_thread(std::thread([this, session] { serve_sink(session); }));
        } catch (const TransportError& e) {
            if (e.code() == TransportErrc::timeout) continue;
            break;
        }
    }
}

void RegistryService::serve_api(std::shared_ptr<Session> session) {
    Clock::Participation participation(clock_);
    track(session.get(), true);
    for (;;) {
        std::string line;
        try {
            line = session->recv(3600'000ms);
        } catch (const TransportError&) {
            break;
        }
        std::string reply;
        try {
            reply = dispatch_api(line);
        } catch (const std::exception& e) {
            reply = err_line(ErrCode::bad_value, e.what());
        }
        try {
            session->send(reply);
        } catch (const TransportError&) {
            break;
        }
    }
    track(session.get(), false);
}

std::string RegistryService::dispatch_api(const std::string& line) {
    auto split = split_segments(line);
    if (std::holds_alternative<WireError>(split)) {
        return err_line(ErrCode::malformed_line, "bad request line");
    }
    const auto& segs = std::get<std::vector<std::string>>(split);
    const auto& op = segs[0];
    auto kv = kv_of(segs, 1);

    if (op == "RID") {
        SensorIdentity who{get_or(kv, "id"), get_or(kv, "model"), get_or(kv, "mfr")};
        auto result = identify(who);
        if (auto* err = std::get_if<Err>(&result)) {
            return err_line(err->code, err->detail);
        }
        const auto& r = std::get<SensorRecord>(result);
        return join_segments({"REC", "id=" + r.identity.id, "plugin=" + r.plugin_id,
                              "status=" + std::string(to_string(r.status)),
                              "rate=" + std::to_string(r.base_rate.count()),
                              "freq=" + std::to_string(r.base_freq.count()),
                              "measures=" + join_list(r.measures),
                              "peer=" + r.peer_temperature});
    }

    if (op == "FPL") {
        auto result = find_plugin(get_or(kv, "id"));
        if (auto* err = std::get_if<Err>(&result)) {
            return err_line(err->code, err->detail);
        }
        const auto& d = std::get<plugin::AdapterDescriptor>(result);
        return join_segments({"PLG", "plugin_id=" + d.plugin_id, "dialect=" + d.dialect,
                              "version=" + std::to_string(d.version),
                              "artifact=" + d.artifact});
    }

    if (op == "REG") {
        auto profile_line = get_or(kv, "profile");
        auto strategy_line = get_or(kv, "strategy");
        auto profile_msg = decode_message(profile_line);
        if (is_error(profile_msg) ||
            !std::holds_alternative<ProfileMsg>(std::get<Message>(profile_msg))) {
            return err_line(ErrCode::bad_value, "bad profile payload");
        }
        auto strategy = decode_strategy(strategy_line);
        if (std::holds_alternative<WireError>(strategy)) {
            return err_line(ErrCode::bad_value, "bad strategy payload");
        }
        auto result = register_sensor(
            get_or(kv, "id"),
            std::get<ProfileMsg>(std::get<Message>(profile_msg)).profile,
            std::get<SensingStrategy>(strategy));
        if (auto* err = std::get_if<Err>(&result)) {
            return err_line(err->code, err->detail);
        }
        const auto& reg = std::get<Registration>(result);
        return join_segments({"RGD", "regid=" + reg.regid, "token=" + reg.token});
    }

    if (op == "PLN") {
        auto result = plan(get_or(kv, "id"));
        if (auto* err = std::get_if<Err>(&result)) {
            return err_line(err->code, err->detail);
        }
        return encode_strategy(std::get<SensingStrategy>(result));
    }

    if (op == "CTX") {
        Context ctx;
        {
            std::lock_guard<std::mutex> g(mu_);
            ctx = context_;
        }
        if (kv.count("season")) {
            auto s = season_from_string(kv.at("season"));
            if (!s) return err_line(ErrCode::bad_value, "bad season");
            ctx.season = *s;
        }
        if (kv.count("tod")) {
            auto p = day_phase_from_string(kv.at("tod"));
            if (!p) return err_line(ErrCode::bad_value, "bad time of day");
            ctx.time_of_day = *p;
        }
        for (const auto& [k, v] : kv) {
            if (k.rfind("peer.", 0) == 0) {
                auto status = peer_status_from_string(v);
                if (!status) return err_line(ErrCode::bad_value, "bad peer status");
                ctx.peer_status[k.substr(5)] = *status;
            }
        }
        set_context(ctx);
        return join_segments({"ACK", "CTX"});
    }

    if (op == "PUB") {
        publish_schedule(get_or(kv, "path"), get_or(kv, "user"), get_or(kv, "pass"),
                         get_or(kv, "text"));
        return join_segments({"ACK", "PUB"});
    }

    if (op == "FCH") {
        auto result =
            serve_schedule(get_or(kv, "path"), get_or(kv, "user"), get_or(kv, "pass"));
        if (auto* err = std::get_if<Err>(&result)) {
            return err_line(err->code, err->detail);
        }
        return join_segments({"FIL", std::get<std::string>(result)});
    }

    if (op == "DCW") {
        auto id = get_or(kv, "id");
        std::chrono::milliseconds timeout{std::stoll(get_or(kv, "timeout_ms", "0"))};
        long min_gen = std::stol(get_or(kv, "min_gen", "1"));
        long gen = wait_direct_gen(id, min_gen, timeout);
        auto at = direct_connected_at(id);
        return join_segments({"DCS",
                              std::string("connected=") + (gen >= std::max(1L, min_gen) ? "1" : "0"),
                              "at=" + std::to_string(at ? at->ms : -1),
                              "gen=" + std::to_string(gen)});
    }

    if (op == "RDC") {
        auto id = get_or(kv, "id");
        std::int64_t since = std::stoll(get_or(kv, "since_ms", "0"));
        long readings = 0;
        long batches = 0;
        {
            std::lock_guard<std::mutex> g(sink_mu_);
            for (const auto& r : readings_) {
                if (r.reading.sensor_id == id && r.arrived_at.ms > since) readings++;
            }
            for (const auto& b : batches_) {
                if (b.sensor_id == id && b.at.ms > since) batches++;
            }
        }
        return join_segments({"RDN", "readings=" + std::to_string(readings),
                              "batches=" + std::to_string(batches)});
    }

    if (op == "RLY") {
        std::chrono::milliseconds timeout{std::stoll(get_or(kv, "timeout_ms", "5000"))};
        auto result = relay(get_or(kv, "id"), get_or(kv, "line"), timeout);
        if (auto* err = std::get_if<Err>(&result)) {
            return err_line(err->code, err->detail);
        }
        return join_segments({"RLR", "line=" + std::get<std::string>(result)});
    }

    return err_line(ErrCode::unknown_tag, "unknown registry op: " + op);
}

// ── Sink ─────────────────────────────────────────────────────────────────────

void RegistryService::serve_sink(std::shared_ptr<Session> session) {
    Clock::Participation participation(clock_);
    track(session.get(), true);

    std::string sensor_id;
    std::shared_ptr<SinkConn> conn;

    // Authentication first.
    try {
        auto hello = session->recv(10'000ms);
        auto split = split_segments(hello);
        if (std::holds_alternative<WireError>(split)) {
            session->send(err_line(ErrCode::malformed_line, "bad hello"));
            track(session.get(), false);
            return;
        }
        auto kv = kv_of(std::get<std::vector<std::string>>(split), 1);
        sensor_id = get_or(kv, "id");
        auto token = get_or(kv, "token");
        bool ok = false;
        {
            std::lock_guard<std::mutex> g(mu_);
            auto* record = store_.find(sensor_id);
            ok = record && record->status == RegistrationStatus::registered &&
                 !token.empty() && record->credential_token == token;
        }
        if (!ok) {
            rejected_++;
            session->send(err_line(ErrCode::bad_token, "authentication failed"));
            track(session.get(), false);
            return;
        }
        session->send(join_segments({"ACK", "NET"}));

        conn = std::make_shared<SinkConn>(clock_);
        conn->session = session;
        conn->token = token;
        {
            std::lock_guard<std::mutex> g(sink_mu_);
            sinks_[sensor_id] = conn;
            direct_at_[sensor_id] = clock_.now();
            direct_gen_[sensor_id]++;
        }
        sink_cond_.notify_all();
    } catch (const TransportError&) {
        track(session.get(), false);
        return;
    }

    for (;;) {
        std::string line;
        try {
            line = session->recv(3600'000ms);
        } catch (const TransportError&) {
            break;
        }
        auto split = split_segments(line);
        if (std::holds_alternative<WireError>(split)) continue;
        const auto& segs = std::get<std::vector<std::string>>(split);

        if (segs[0] == "RDG") {
            auto msg = decode_message(line);
            if (is_error(msg)) continue;
            const auto& reading = std::get<Reading>(std::get<Message>(msg));
            auto result = ingest_reading(conn->token, reading);
            if (std::holds_alternative<Err>(result)) {
                try {
                    session->send(err_line(ErrCode::bad_token, "rejected"));
                } catch (const TransportError&) {
                    break;
                }
            }
        } else if (segs[0] == "BAT") {
            auto kv = kv_of(segs, 1);
            bool token_ok;
            {
                std::lock_guard<std::mutex> g(mu_);
                auto* record = store_.find(sensor_id);
                token_ok = record && record->credential_token == conn->token;
            }
            if (token_ok) {
                StoredBatch b{sensor_id, std::stoi(get_or(kv, "n", "0")),
                              TimePoint{std::stoll(get_or(kv, "ts", "0"))}};
                std::lock_guard<std::mutex> g(sink_mu_);
                batches_.push_back(b);
            }
        } else {
            // Relay replies and other command-path traffic.
            {
                std::lock_guard<std::mutex> g(conn->mu);
                conn->mailbox.push_back(line);
            }
            conn->mailbox_cond.notify_all();
        }
    }

    {
        std::lock_guard<std::mutex> g(sink_mu_);
        auto it = sinks_.find(sensor_id);
        if (it != sinks_.end() && it->second == conn) sinks_.erase(it);
    }
    track(session.get(), false);
}

// ── Operations ───────────────────────────────────────────────────────────────

std::variant<SensorRecord, Err> RegistryService::identify(
    const SensorIdentity& identity) const {
    std::lock_guard<std::mutex> g(mu_);
    const auto* r = store_.find(identity.id);
    if (!r || r->identity.model != identity.model ||
        r->identity.manufacturer != identity.manufacturer) {
        return Err{ErrCode::unknown_sensor, identity.id};
    }
    return *r;
}

std::variant<plugin::AdapterDescriptor, Err> RegistryService::find_plugin(
    const std::string& id) const {
    std::lock_guard<std::mutex> g(mu_);
    const auto* r = store_.find(id);
    if (!r) return Err{ErrCode::unknown_sensor, id};
    if (!r->plugin_id.empty()) {
        const auto* d = catalog_.by_id(r->plugin_id);
        if (!d) return Err{ErrCode::no_adapter, "catalog lacks " + r->plugin_id};
        return *d;
    }
    auto matched = catalog_.match(r->identity);
    if (auto* miss = std::get_if<plugin::NoAdapter>(&matched)) {
        return Err{ErrCode::no_adapter, miss->detail};
    }
    return std::get<plugin::AdapterDescriptor>(matched);
}

std::string RegistryService::fresh_token() {
    static constexpr char hex[] = "0123456789abcdef";
    std::string t = "tk-";
    for (int i = 0; i < 24; ++i) {
        t += hex[token_rng_() % 16];
    }
    return t;
}

std::variant<Registration, Err> RegistryService::register_sensor(
    const std::string& id, const SensorProfile& profile, const SensingStrategy& strategy) {
    std::lock_guard<std::mutex> g(mu_);
    auto* r = store_.find(id);
    if (!r) return Err{ErrCode::unknown_sensor, id};
    r->profile = profile;
    r->strategy = strategy;
    r->status = RegistrationStatus::registered;
    r->credential_token = fresh_token();  // re-registration rotates the token
    Registration reg{"R-" + std::to_string(next_regid_++), r->credential_token};
    {
        std::lock_guard<std::mutex> io(io_mu_);
        if (registrations_log_.is_open()) {
            registrations_log_ << clock_.now().ms << "\tREGISTERED\t" << id << "\t"
                               << reg.regid << "\t" << reg.token << "\n";
            registrations_log_.flush();
        }
    }
    return reg;
}

std::variant<SensingStrategy, Err> RegistryService::plan(const std::string& id) const {
    std::lock_guard<std::mutex> g(mu_);
    const auto* r = store_.find(id);
    if (!r) return Err{ErrCode::unknown_sensor, id};
    return plan_strategy(*r, context_);
}

void RegistryService::set_context(const Context& context) {
    std::lock_guard<std::mutex> g(mu_);
    context_ = context;
}

void RegistryService::set_peer_status(const std::string& id, PeerStatus status) {
    std::lock_guard<std::mutex> g(mu_);
    context_.peer_status[id] = status;
}

Context RegistryService::context() const {
    std::lock_guard<std::mutex> g(mu_);
    return context_;
}

void RegistryService::publish_schedule(const std::string& path, const std::string& user,
                                       const std::string& pass, const std::string& text) {
    std::lock_guard<std::mutex> g(mu_);
    files_[path] = PublishedFile{user, pass, text};
}

std::variant<std::string, Err> RegistryService::serve_schedule(const std::string& path,
                                                               const std::string& user,
                                                               const std::string& pass) const {
    std::lock_guard<std::mutex> g(mu_);
    auto it = files_.find(path);
    if (it == files_.end()) return Err{ErrCode::not_found, path};
    if (it->second.user != user || it->second.pass != pass) {
        return Err{ErrCode::auth_failed, "bad credentials for " + path};
    }
    return it->second.text;
}

std::variant<std::monostate, Err> RegistryService::ingest_reading(const std::string& token,
                                                                  const Reading& r) {
    bool ok;
    {
        std::lock_guard<std::mutex> g(mu_);
        const auto* record = store_.find(r.sensor_id);
        ok = record && record->status == RegistrationStatus::registered &&
             record->credential_token == token;
    }
    if (!ok) {
        rejected_++;
        std::lock_guard<std::mutex> io(io_mu_);
        if (rejects_log_.is_open()) {
            rejects_log_ << encode_message(Message{r});
            rejects_log_.flush();
        }
        return Err{ErrCode::bad_token, r.sensor_id};
    }
    auto arrived = clock_.now();
    {
        std::lock_guard<std::mutex> g(sink_mu_);
        readings_.push_back({r, arrived});
    }
    {
        std::lock_guard<std::mutex> io(io_mu_);
        if (readings_log_.is_open()) {
            readings_log_ << arrived.ms << '\t' << encode_message(Message{r});
            readings_log_.flush();
        }
    }
    return std::monostate{};
}

std::optional<TimePoint> RegistryService::direct_connected_at(const std::string& id) const {
    std::lock_guard<std::mutex> g(sink_mu_);
    auto it = direct_at_.find(id);
    if (it == direct_at_.end()) return std::nullopt;
    return it->second;
}

bool RegistryService::wait_direct(const std::string& id, std::chrono::milliseconds timeout) {
    return wait_direct_gen(id, 1, timeout) >= 1;
}

long RegistryService::wait_direct_gen(const std::string& id, long min_gen,
                                      std::chrono::milliseconds timeout) {
    std::unique_lock<std::mutex> lk(sink_mu_);
    auto gen = [&] { auto it = direct_gen_.find(id); return it == direct_gen_.end() ? 0L : it->second; };
    sink_cond_.wait_until(lk, clock_.now() + timeout, [&] { return gen() >= min_gen; });
    return gen();
}

std::vector<StoredReading> RegistryService::readings_for(const std::string& id) const {
    std::lock_guard<std::mutex> g(sink_mu_);
    std::vector<StoredReading> out;
    for (const auto& r : readings_) {
        if (r.reading.sensor_id == id) out.push_back(r);
    }
    return out;
}

std::vector<StoredBatch> RegistryService::batches_for(const std::string& id) const {
    std::lock_guard<std::mutex> g(sink_mu_);
    std::vector<StoredBatch> out;
    for (const auto& b : batches_) {
        if (b.sensor_id == id) out.push_back(b);
    }
    return out;
}

std::vector<StoredReading> RegistryService::all_readings() const {
    std::lock_guard<std::mutex> g(sink_mu_);
    return readings_;
}

long RegistryService::rejected_count() const {
    return rejected_.load();
}

bool RegistryService::sink_attached(const std::string& id) const {
    std::lock_guard<std::mutex> g(sink_mu_);
    return sinks_.count(id) > 0;
}

std::variant<std::string, Err> RegistryService::relay(const std::string& id,
                                                      const std::string& line,
                                                      std::chrono::milliseconds timeout) {
    std::shared_ptr<SinkConn> conn;
    {
        std::lock_guard<std::mutex> g(sink_mu_);
        auto it = sinks_.find(id);
        if (it != sinks_.end()) conn = it->second;
    }
    if (!conn) return Err{ErrCode::unreachable, id + " has no sink connection"};

    std::lock_guard<std::mutex> serial(conn->relay_mu);
    {
        std::lock_guard<std::mutex> g(conn->mu);
        conn->mailbox.clear();  // drop stale unsolicited lines
    }
    std::string payload = line;
    if (payload.empty() || payload.back() != '\n') payload += '\n';
    try {
        conn->session->send(payload);
    } catch (const TransportError&) {
        return Err{ErrCode::unreachable, id};
    }
    std::unique_lock<std::mutex> lk(conn->mu);
    bool got = conn->mailbox_cond.wait_until(lk, clock_.now() + timeout,
                                             [&] { return !conn->mailbox.empty(); });
    if (!got) return Err{ErrCode::unreachable, "no relay reply from " + id};
    auto reply = conn->mailbox.front();
    conn->mailbox.pop_front();
    return reply;
}

std::optional<SensorRecord> RegistryService::record(const std::string& id) const {
    std::lock_guard<std::mutex> g(mu_);
    const auto* r = store_.find(id);
    if (!r) return std::nullopt;
    return *r;
}

}  // namespace caddot::registry
