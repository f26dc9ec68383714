#include "caddot/harness/runner.hpp"

#include <unistd.h>

#include <atomic>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "caddot/configurator/orchestrator.hpp"
#include "caddot/registry/client.hpp"
#include "caddot/sensor/runtime.hpp"

namespace caddot::harness {

using namespace caddot::configurator;
using namespace caddot::protocol;
using namespace caddot::transport;
using namespace std::chrono_literals;

namespace {

int alloc_port() {
    static std::atomic<int> next{20000 + (getpid() * 13) % 18000};
    return 1024 + (next.fetch_add(1) % 60000);
}

struct SubRun {
    std::vector<SessionTrace> traces;
    std::vector<AuditResult> audits;
    long rejects = 0;
};

struct DepartPlan {
    std::string id;
    std::chrono::milliseconds at;
};

SubRun run_one_transport(const Experiment& e, TransportKind kind,
                         const std::vector<sensor::SensorSpec>& fleet,
                         const registry::Store& store, const plugin::Catalog& catalog,
                         const std::string& run_dir) {
    SimClock clock(SimClock::Options{true, std::chrono::microseconds(1500)});
    auto latency = e.emulate_latency ? LatencyModel::emulation_profile() : LatencyModel::none();
    Transport net(clock, latency, e.seed);

    registry::RegistryConfig reg_cfg;
    reg_cfg.run_dir = run_dir;
    reg_cfg.token_seed = e.seed ^ 0x1009;
    registry::RegistryService service(net, reg_cfg, store, catalog);
    service.start();
    registry::Client client(net, service.api_endpoint());
    plugin::AdapterHost host(e.plugins_dir);

    int announce_port = alloc_port();
    BeaconSpec beacon;
    beacon.kind = kind;
    beacon.announce_port = announce_port;
    beacon.interval = 1000ms;
    beacon.zone = e.mobile_mode ? e.mobile.zones.front() : "default";

    OrchestratorConfig ocfg;
    ocfg.beacons = {beacon};
    ocfg.parallelism = e.parallelism;
    ocfg.pipeline.registry = &client;
    ocfg.pipeline.host = &host;
    auto sink_hp = split_host_port(service.sink_endpoint().address);
    ocfg.pipeline.sink_host = sink_hp->first;
    ocfg.pipeline.sink_port = sink_hp->second;
    if (e.mobile_mode) {
        ocfg.mobile = MobilePlan{e.mobile.zones,
                                 std::chrono::duration_cast<std::chrono::milliseconds>(
                                     e.mobile.dwell)};
    }
    Orchestrator orchestrator(net, ocfg);
    orchestrator.start();

    sensor::SensorNetConfig scfg;
    scfg.kind = kind;
    scfg.announce_port = announce_port;
    scfg.calendar = e.epoch;
    sensor::FleetRuntime sensors(net, scfg);

    // Departure plan (seeded, deterministic).
    std::vector<DepartPlan> departures;
    std::set<std::string> departing;
    if (e.churn && e.churn->departure_rate > 0.0) {
        std::mt19937_64 rng(e.seed ^ 0xD17);
        auto count = static_cast<std::size_t>(e.churn->departure_rate *
                                              static_cast<double>(fleet.size()));
        std::vector<std::size_t> order(fleet.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), rng);
        auto arrival_span =
            e.churn->arrival_interval.count() * static_cast<std::int64_t>(fleet.size());
        std::uniform_int_distribution<std::int64_t> when(
            1000, std::max<std::int64_t>(3000, arrival_span * 1000));
        for (std::size_t i = 0; i < count && i < order.size(); ++i) {
            const auto& id = fleet[order[i]].identity.id;
            departures.push_back({id, std::chrono::milliseconds(when(rng))});
            departing.insert(id);
        }
    }

    // Arrival driver.
    std::thread arrivals([&] {
        Clock::Participation p(clock);
        auto interval = e.churn ? e.churn->arrival_interval : std::chrono::seconds(0);
        for (const auto& spec : fleet) {
            sensors.spawn_sensor(spec);
            if (interval.count() > 0) clock.sleep_for(interval);
        }
    });

    // Departure driver.
    std::thread departures_driver([&] {
        Clock::Participation p(clock);
        auto plans = departures;
        std::sort(plans.begin(), plans.end(),
                  [](const DepartPlan& a, const DepartPlan& b) { return a.at < b.at; });
        for (const auto& plan : plans) {
            clock.sleep_until(TimePoint{plan.at.count()});
            sensors.stop_sensor(plan.id);
        }
    });

    // Context timeline driver.
    std::thread context_driver([&] {
        Clock::Participation p(clock);
        registry::Context ctx;
        for (const auto& step : e.context_timeline) {
            clock.sleep_until(TimePoint{step.at.count() * 1000});
            if (step.season) ctx.season = *step.season;
            if (step.time_of_day) ctx.time_of_day = *step.time_of_day;
            for (const auto& [id, status] : step.peers) ctx.peer_status[id] = status;
            try {
                client.set_context(ctx);
            } catch (const registry::RegistryError&) {
                return;
            }
            for (const auto& id : step.reconfigure) {
                orchestrator.reconfigure(id);
            }
        }
    });

    // Wait for the dust to settle and the world drivers to finish, then give
    // the audit window room after the most recent (re-)authentication.
    {
        Clock::Participation p(clock);
        std::size_t expected = fleet.size() - departing.size();
        orchestrator.wait_traces(expected,
                                 std::chrono::duration_cast<std::chrono::milliseconds>(
                                     e.settle));
    }
    arrivals.join();
    departures_driver.join();
    context_driver.join();
    {
        Clock::Participation p(clock);
        TimePoint audit_until{0};
        for (const auto& t : orchestrator.traces()) {
            if (t.status != SessionStatus::configured) continue;
            if (auto at = service.direct_connected_at(t.sensor_id)) {
                auto end = TimePoint{at->ms + e.audit_window.count() * 1000};
                if (end > audit_until) audit_until = end;
            }
        }
        if (audit_until.ms > 0) clock.sleep_until(audit_until);
    }

    SubRun result;
    // De-duplicate reconfiguration traces: the per-sensor outcome is its last
    // trace; earlier ones are kept only in the registry logs.
    std::map<std::string, SessionTrace> final_traces;
    std::vector<SessionTrace> anonymous;
    for (const auto& t : orchestrator.traces()) {
        if (t.sensor_id.rfind("unknown@", 0) == 0) {
            anonymous.push_back(t);
        } else {
            final_traces[t.sensor_id] = t;
        }
    }

    // Fleet members with no trace at all (departed early or still seeking).
    for (const auto& spec : fleet) {
        const auto& id = spec.identity.id;
        if (final_traces.count(id) > 0) continue;
        if (spec.program == sensor::ProgramDesign::spd) continue;  // traced anonymously
        TraceBuilder builder(id, std::string(to_string(kind)), clock);
        auto trace =
            builder.fail_at(Step::setup, departing.count(id) ? "Departed" : "Incomplete");
        final_traces[id] = trace;
    }

    for (auto& [id, t] : final_traces) result.traces.push_back(std::move(t));
    for (auto& t : anonymous) result.traces.push_back(std::move(t));

    // Cadence audits for every configured sensor.
    for (const auto& t : result.traces) {
        if (t.status != SessionStatus::configured) continue;
        auto record = service.record(t.sensor_id);
        auto direct_at = service.direct_connected_at(t.sensor_id);
        if (!record || !record->strategy || !direct_at) continue;
        int phen = record->profile ? static_cast<int>(record->profile->phenomena.size()) : 1;

        std::vector<TimePoint> batch_times;
        for (const auto& b : service.batches_for(t.sensor_id)) batch_times.push_back(b.at);
        std::vector<TimePoint> reading_arrivals;
        for (const auto& r : service.readings_for(t.sensor_id)) {
            reading_arrivals.push_back(r.arrived_at);
        }
        auto audit = run_cadence_audit(t.sensor_id, std::string(to_string(kind)),
                                       *record->strategy, phen, e.epoch, *direct_at,
                                       e.audit_window, reading_arrivals, batch_times);
        audit.strategy_line = registry::encode_strategy(*record->strategy);
        audit.phenomena = phen;
        audit.direct_at_ms = direct_at->ms;
        audit.window_s = e.audit_window.count();
        audit.epoch_weekday = static_cast<int>(e.epoch.epoch_weekday);
        audit.epoch_minute = e.epoch.epoch_time.minutes;
        result.audits.push_back(std::move(audit));
    }
    result.rejects = service.rejected_count();

    sensors.stop_all();
    orchestrator.stop();
    service.stop();
    return result;
}

}  // namespace

std::variant<Report, RunError> run_experiment(Experiment e, const RunOptions& opts) {
    if (opts.emulate_latency) e.emulate_latency = *opts.emulate_latency;
    if (opts.deterministic) e.deterministic = *opts.deterministic;
    if (opts.transports) e.transports = *opts.transports;
    if (opts.seed) e.seed = *opts.seed;
    if (e.emulate_latency && e.deterministic) {
        // Latency draws are not byte-reproducible across thread schedules.
        e.deterministic = false;
    }

    auto fleet_parsed = sensor::load_fleet_file(e.fleet_file);
    if (auto* err = std::get_if<sensor::FleetParseError>(&fleet_parsed)) {
        return RunError{"FleetParseError: " + e.fleet_file + " line " +
                            std::to_string(err->line) + ": " + err->detail,
                        3};
    }
    const auto& fleet = std::get<std::vector<sensor::SensorSpec>>(fleet_parsed);

    auto store_parsed = registry::Store::load_file(e.store_file, e.schedules_dir);
    if (auto* err = std::get_if<registry::StoreParseError>(&store_parsed)) {
        return RunError{"StoreParseError: " + e.store_file + " line " +
                            std::to_string(err->line) + ": " + err->detail,
                        3};
    }
    const auto& store = std::get<registry::Store>(store_parsed);

    auto catalog_loaded = plugin::Catalog::load_dir(e.plugins_dir);
    if (auto* err = std::get_if<std::string>(&catalog_loaded)) {
        return RunError{"CatalogError: " + *err, 3};
    }
    const auto& catalog = std::get<plugin::Catalog>(catalog_loaded);

    std::vector<std::string> transport_names;
    std::vector<SessionTrace> traces;
    std::vector<AuditResult> audits;
    long rejects = 0;

    for (auto kind : e.transports) {
        transport_names.emplace_back(to_string(kind));
        std::string run_dir;
        if (!opts.out_dir.empty()) {
            run_dir = opts.out_dir + "/" + std::string(to_string(kind));
        }
        try {
            auto sub = run_one_transport(e, kind, fleet, store, catalog, run_dir);
            traces.insert(traces.end(), sub.traces.begin(), sub.traces.end());
            audits.insert(audits.end(), sub.audits.begin(), sub.audits.end());
            rejects += sub.rejects;
        } catch (const TransportError& ex) {
            return RunError{std::string("PortUnavailable: ") + ex.what(), 3};
        }
    }

    auto report = build_report(e.name, e.deterministic, std::move(transport_names),
                               std::move(traces), std::move(audits), rejects);
    if (!opts.out_dir.empty()) {
        write_report_files(report, opts.out_dir);
    }
    return report;
}

OfflineAudit audit_run_dir(const std::string& out_dir, const std::string& sensor_filter) {
    OfflineAudit result;
    std::ifstream in(out_dir + "/report.json");
    if (!in) {
        result.ok = false;
        result.lines.push_back("cannot open " + out_dir + "/report.json");
        return result;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    auto j = nlohmann::json::parse(ss.str(), nullptr, false);
    if (j.is_discarded() || !j.contains("audits")) {
        result.ok = false;
        result.lines.push_back("report.json is unreadable");
        return result;
    }

    for (const auto& a : j["audits"]) {
        auto id = a.value("sensor_id", std::string());
        if (!sensor_filter.empty() && id != sensor_filter) continue;
        auto transport = a.value("transport", std::string());

        auto strategy = registry::decode_strategy(a.value("strategy", std::string()));
        if (std::holds_alternative<WireError>(strategy)) {
            result.ok = false;
            result.lines.push_back(id + ": stored strategy is unreadable");
            continue;
        }
        TimePoint direct_at{a.value("direct_at_ms", std::int64_t{0})};
        auto window = std::chrono::seconds(a.value("window_s", std::int64_t{0}));
        int phen = a.value("phenomena", 1);

        // Recount the readings log for this transport. Each line is
        // "<arrival_ms>\t<RDG wire line>".
        std::vector<TimePoint> readings;
        std::vector<TimePoint> batches;
        std::ifstream log(out_dir + "/" + transport + "/readings.log");
        std::string line;
        while (std::getline(log, line)) {
            auto tab = line.find('\t');
            if (tab == std::string::npos) continue;
            std::int64_t arrival = 0;
            try {
                arrival = std::stoll(line.substr(0, tab));
            } catch (const std::exception&) {
                continue;
            }
            auto msg = decode_message(line.substr(tab + 1) + "\n");
            if (is_error(msg)) continue;
            if (auto* r = std::get_if<Reading>(&std::get<Message>(msg))) {
                if (r->sensor_id == id) readings.push_back(TimePoint{arrival});
            }
        }
        protocol::SimCalendar cal{static_cast<Weekday>(a.value("epoch_weekday", 0)),
                                  TimeOfDay{a.value("epoch_minute", 0)}};
        // Batch trailers are not part of the readings log; trust the stored
        // batch counts but recheck the readings against the oracle.
        auto audit = run_cadence_audit(id, transport,
                                       std::get<SensingStrategy>(strategy), phen, cal,
                                       direct_at, window, readings, batches);
        audit.expected_batches = a.value("expected_batches", 0L);
        audit.actual_batches = a.value("actual_batches", 0L);
        audit.pass = audit.actual_readings == audit.expected_readings &&
                     audit.actual_batches == audit.expected_batches;
        if (!audit.pass) result.ok = false;
        result.lines.push_back(audit.describe());
    }
    if (result.lines.empty()) {
        result.lines.push_back("no matching audits in " + out_dir);
    }
    return result;
}

}  // namespace caddot::harness
