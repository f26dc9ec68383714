#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>

#include "caddot/configurator/orchestrator.hpp"
#include "caddot/registry/client.hpp"
#include "caddot/sensor/runtime.hpp"

using namespace caddot;
using namespace caddot::configurator;
using namespace caddot::protocol;
using namespace std::chrono_literals;

namespace {

constexpr std::string_view kAlwaysOn = "MON-SUN 00:00-23:59 rate=5 freq=15\n";

registry::Store test_store() {
    std::string text =
        "S-A1\tTH-02\tACME\tacme-a\ttemperature\t10\t30\talways.sched\t-\n"
        "S-B1\tHX-07\tSensorix\tsx-b\tpressure\t10\t30\talways.sched\t-\n"
        "S-C1\tQR-04\tEnviro\ten-c\tluminosity\t10\t30\talways.sched\t-\n"
        "S-T1\tTH-02\tACME\tacme-a\ttemperature\t20\t30\talways.sched\t-\n"
        "S-H1\tHM-01\tACME\tacme-a\thumidity\t20\t30\talways.sched\tS-T1\n"
        "S-P1\tTH-02\tACME\tacme-a\ttemperature\t10\t30\talways.sched\t-\n"
        "S-P2\tTH-02\tACME\tacme-a\ttemperature\t10\t30\talways.sched\t-\n"
        "S-P3\tTH-02\tACME\tacme-a\ttemperature\t10\t30\talways.sched\t-\n"
        "S-P4\tTH-02\tACME\tacme-a\ttemperature\t10\t30\talways.sched\t-\n"
        "S-P5\tTH-02\tACME\tacme-a\ttemperature\t10\t30\talways.sched\t-\n"
        "S-P6\tTH-02\tACME\tacme-a\ttemperature\t10\t30\talways.sched\t-\n"
        "S-P7\tTH-02\tACME\tacme-a\ttemperature\t10\t30\talways.sched\t-\n"
        "S-P8\tTH-02\tACME\tacme-a\ttemperature\t10\t30\talways.sched\t-\n"
        "S-P9\tTH-02\tACME\tacme-a\ttemperature\t10\t30\talways.sched\t-\n"
        "S-P10\tTH-02\tACME\tacme-a\ttemperature\t10\t30\talways.sched\t-\n"
        "S-HANG\tZZ-00\tACME\tacme-a\ttemperature\t10\t30\talways.sched\t-\n";
    auto dir = std::filesystem::temp_directory_path() / "caddot-conf-sched";
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "always.sched") << kAlwaysOn;
    auto parsed = registry::Store::parse(text, dir.string());
    REQUIRE_MESSAGE(std::holds_alternative<registry::Store>(parsed),
                    std::get<registry::StoreParseError>(parsed).detail);
    return std::get<registry::Store>(parsed);
}

plugin::Catalog test_catalog() {
    plugin::Catalog c;
    auto add = [&](std::string id, std::string dialect, std::string mfr, std::string model) {
        plugin::AdapterDescriptor d;
        d.plugin_id = std::move(id);
        d.dialect = std::move(dialect);
        d.matches = {{std::move(mfr), std::move(model)}};
        c.add(d);
    };
    add("acme-a", "A", "ACME", "*");
    add("sx-b", "B", "Sensorix", "*");
    add("en-c", "C", "Enviro", "*");
    return c;
}

sensor::SensorSpec spec_of(std::string id, std::string model, std::string mfr,
                           sensor::DialectId dialect,
                           sensor::ProgramDesign program = sensor::ProgramDesign::cpd) {
    sensor::SensorSpec s;
    s.identity = {std::move(id), std::move(model), std::move(mfr)};
    s.phenomena = {{"temperature", "C", 11}};
    s.dialect = dialect;
    s.program = program;
    return s;
}

// Full in-process bench: sim clock, registry, orchestrator, fleet.
struct Bench {
    SimClock clock{SimClock::Options{true, std::chrono::microseconds(1500)}};
    transport::Transport net;
    registry::RegistryService service;
    std::unique_ptr<registry::Client> client;
    plugin::AdapterHost host;
    std::unique_ptr<Orchestrator> orchestrator;
    sensor::SensorNetConfig sensor_cfg;
    std::unique_ptr<sensor::FleetRuntime> fleet;

    static registry::RegistryConfig reg_cfg(int sink_port) {
        registry::RegistryConfig c;
        c.sink_port = sink_port;
        return c;
    }

    explicit Bench(transport::TransportKind kind = transport::TransportKind::channel,
                   int parallelism = 8, int sink_port = 0)
        : net(clock), service(net, reg_cfg(sink_port), test_store(), test_catalog()) {
        service.start();
        client = std::make_unique<registry::Client>(net, service.api_endpoint());

        static std::atomic<int> next_port{24411};
        int announce_port = next_port.fetch_add(1);

        transport::BeaconSpec beacon;
        beacon.kind = kind;
        beacon.interval = 1000ms;
        beacon.zone = "default";
        beacon.announce_port = announce_port;

        OrchestratorConfig cfg;
        cfg.beacons = {beacon};
        cfg.parallelism = parallelism;
        cfg.pipeline.registry = client.get();
        cfg.pipeline.host = &host;
        auto sink = service.sink_endpoint();
        auto hp = transport::split_host_port(sink.address);
        cfg.pipeline.sink_host = hp->first;
        cfg.pipeline.sink_port = hp->second;
        orchestrator = std::make_unique<Orchestrator>(net, cfg);
        orchestrator->start();

        sensor_cfg.kind = kind;
        sensor_cfg.announce_port = announce_port;
        sensor_cfg.scan_window = 1500ms;
        fleet = std::make_unique<sensor::FleetRuntime>(net, sensor_cfg);
    }

    ~Bench() {
        fleet->stop_all();
        orchestrator->stop();
        service.stop();
    }

    SessionTrace trace_for(const std::string& id) {
        for (const auto& t : orchestrator->traces()) {
            if (t.sensor_id == id) return t;
        }
        FAIL("no trace for " << id);
        return {};
    }
};

}  // namespace

TEST_CASE("golden pipeline: dialect-A sensor ends CONFIGURED with ten ordered steps") {
    Bench bench;
    bench.fleet->spawn_sensor(spec_of("S-A1", "TH-02", "ACME", sensor::DialectId::A));
    REQUIRE(bench.orchestrator->wait_traces(1, 120'000ms));

    auto trace = bench.trace_for("S-A1");
    CHECK(trace.status == SessionStatus::configured);
    REQUIRE(trace.steps.size() == 10);
    for (int i = 0; i < 10; ++i) {
        CHECK(trace.steps[static_cast<std::size_t>(i)].step == static_cast<Step>(i + 1));
    }
    // Monotone and gap-free.
    for (std::size_t i = 1; i < trace.steps.size(); ++i) {
        CHECK(trace.steps[i].start == trace.steps[i - 1].end);
        CHECK(trace.steps[i].end >= trace.steps[i].start);
    }
    // Registry sub-spans recorded.
    std::vector<std::string> names;
    for (const auto& ss : trace.subspans) names.push_back(ss.name);
    CHECK(names == std::vector<std::string>{"identify", "find", "reason", "register"});

    // End state: REGISTERED, sensor DIRECT, first authenticated reading within
    // one communication period.
    auto record = bench.service.record("S-A1");
    REQUIRE(record.has_value());
    CHECK(record->status == registry::RegistrationStatus::registered);
    CHECK(bench.fleet->find("S-A1")->mode() == sensor::Mode::direct);
    {
        Clock::Participation p(bench.clock);
        bench.clock.sleep_for(15'000ms);  // one comm_frequency period
    }
    CHECK(!bench.service.readings_for("S-A1").empty());
}

TEST_CASE("dialect B and C sensors configure through their adapters") {
    Bench bench;
    bench.fleet->spawn_sensor(spec_of("S-B1", "HX-07", "Sensorix", sensor::DialectId::B));
    bench.fleet->spawn_sensor(spec_of("S-C1", "QR-04", "Enviro", sensor::DialectId::C));
    REQUIRE(bench.orchestrator->wait_traces(2, 240'000ms));
    CHECK(bench.trace_for("S-B1").status == SessionStatus::configured);
    CHECK(bench.trace_for("S-C1").status == SessionStatus::configured);
    CHECK(bench.fleet->find("S-C1")->mode() == sensor::Mode::direct);
}

TEST_CASE("SPD sensor fails extraction and never registers") {
    Bench bench;
    auto spd = spec_of("S-SPD", "Legacy", "OldCo", sensor::DialectId::A,
                       sensor::ProgramDesign::spd);
    bench.fleet->spawn_sensor(spd);
    REQUIRE(bench.orchestrator->wait_traces(1, 120'000ms));
    auto traces = bench.orchestrator->traces();
    REQUIRE(traces.size() == 1);
    CHECK(traces[0].status == SessionStatus::failed);
    CHECK(traces[0].failed_step == 4);
    CHECK(traces[0].fail_reason == "ExtractTimeout");
    CHECK(!bench.service.record("S-SPD").has_value());

    // Parked, not re-looping: no second trace shows up.
    {
        Clock::Participation p(bench.clock);
        bench.clock.sleep_for(30'000ms);
    }
    CHECK(bench.orchestrator->trace_count() == 1);
}

TEST_CASE("sensor unknown to the registry fails at step 5") {
    Bench bench;
    bench.fleet->spawn_sensor(spec_of("S-GHOST", "XX-99", "Nobody", sensor::DialectId::A));
    REQUIRE(bench.orchestrator->wait_traces(1, 120'000ms));
    auto trace = bench.trace_for("S-GHOST");
    CHECK(trace.status == SessionStatus::failed);
    CHECK(trace.failed_step == 5);
    CHECK(trace.fail_reason == "UnknownSensor");
}

TEST_CASE("parallelism limit bounds concurrent adapter sessions") {
    Bench bench(transport::TransportKind::channel, 4);
    for (int i = 1; i <= 10; ++i) {
        bench.fleet->spawn_sensor(
            spec_of("S-P" + std::to_string(i), "TH-02", "ACME", sensor::DialectId::A));
    }
    REQUIRE(bench.orchestrator->wait_traces(10, 600'000ms));
    for (const auto& t : bench.orchestrator->traces()) {
        CHECK(t.status == SessionStatus::configured);
    }
    CHECK(bench.orchestrator->max_open_adapter_sessions() <= 4);
}

TEST_CASE("mid-session departure fails one trace without touching the rest") {
    Bench bench;
    // S-HANG answers [WHO] then its sensor dies (we stop it as soon as its
    // pipeline has begun).
    bench.fleet->spawn_sensor(spec_of("S-HANG", "ZZ-00", "ACME", sensor::DialectId::A));
    bench.fleet->spawn_sensor(spec_of("S-A1", "TH-02", "ACME", sensor::DialectId::A));
    bench.fleet->spawn_sensor(spec_of("S-B1", "HX-07", "Sensorix", sensor::DialectId::B));

    // Stop the victim as soon as it has been extracted (its trace appears last).
    std::thread killer([&] {
        Clock::Participation p(bench.clock);
        bench.clock.sleep_for(2500ms);
        bench.fleet->stop_sensor("S-HANG");
    });
    killer.join();

    REQUIRE(bench.orchestrator->wait_traces(3, 300'000ms));
    CHECK(bench.trace_for("S-A1").status == SessionStatus::configured);
    CHECK(bench.trace_for("S-B1").status == SessionStatus::configured);
    auto hang = bench.trace_for("S-HANG");
    // Either it raced to CONFIGURED before the kill or it failed cleanly; when
    // it failed the reason names the departure.
    if (hang.status == SessionStatus::failed) {
        CHECK(!hang.fail_reason.empty());
    }
}

TEST_CASE("frost reconfiguration stops and later resumes the humidity sensor") {
    Bench bench;
    bench.fleet->spawn_sensor(spec_of("S-T1", "TH-02", "ACME", sensor::DialectId::A));
    auto humidity = spec_of("S-H1", "HM-01", "ACME", sensor::DialectId::A);
    humidity.phenomena = {{"humidity", "%RH", 21}};
    bench.fleet->spawn_sensor(humidity);
    REQUIRE(bench.orchestrator->wait_traces(2, 240'000ms));
    CHECK(bench.trace_for("S-H1").status == SessionStatus::configured);

    auto* hum = bench.fleet->find("S-H1");
    CHECK(hum->strategy().acquisition == Acquisition::push_schedule);

    // Temperature peer goes dark: next reconfigure puts humidity to sleep.
    bench.service.set_peer_status("S-T1", registry::PeerStatus::faulty);
    auto stop_trace = bench.orchestrator->reconfigure("S-H1");
    CHECK(stop_trace.status == SessionStatus::configured);
    CHECK(hum->strategy().acquisition == Acquisition::stop);
    CHECK(hum->mode() == sensor::Mode::direct);  // still reachable

    // No readings while stopped.
    auto before = bench.service.readings_for("S-H1").size();
    {
        Clock::Participation p(bench.clock);
        bench.clock.sleep_for(60'000ms);
    }
    CHECK(bench.service.readings_for("S-H1").size() == before);

    // Peer restored: scheduled strategy resumes.
    bench.service.set_peer_status("S-T1", registry::PeerStatus::alive);
    auto resume_trace = bench.orchestrator->reconfigure("S-H1");
    CHECK(resume_trace.status == SessionStatus::configured);
    CHECK(hum->strategy().acquisition == Acquisition::push_schedule);
    {
        Clock::Participation p(bench.clock);
        bench.clock.sleep_for(30'000ms);
    }
    CHECK(bench.service.readings_for("S-H1").size() > before);

    // Identical context: reconfigure is idempotent.
    auto again = bench.orchestrator->reconfigure("S-H1");
    CHECK(again.status == SessionStatus::configured);
    CHECK(hum->strategy().acquisition == Acquisition::push_schedule);
}

TEST_CASE("reconfiguring a departed sensor reports Unreachable") {
    Bench bench;
    bench.fleet->spawn_sensor(spec_of("S-A1", "TH-02", "ACME", sensor::DialectId::A));
    REQUIRE(bench.orchestrator->wait_traces(1, 120'000ms));
    bench.fleet->stop_sensor("S-A1");
    {
        Clock::Participation p(bench.clock);
        bench.clock.sleep_for(1000ms);
    }
    auto trace = bench.orchestrator->reconfigure("S-A1");
    CHECK(trace.status == SessionStatus::failed);
    CHECK(trace.fail_reason == "Unreachable");
}

TEST_CASE("transport equivalence: identical command sequences on tcp, udp, channel") {
    std::map<std::string, std::vector<std::string>> sequences;
    for (auto kind : {transport::TransportKind::tcp, transport::TransportKind::udp,
                      transport::TransportKind::channel}) {
        // One fixed sink port so C8 carries identical bytes on every kind.
        Bench bench(kind, 8, 26011);
        std::mutex tap_mu;
        std::vector<std::string> inbound;
        auto spec = spec_of("S-A1", "TH-02", "ACME", sensor::DialectId::A);
        sensor::SensorNetConfig cfg = bench.sensor_cfg;
        cfg.line_tap = [&](const std::string&, const char* dir, const std::string& line) {
            if (std::string(dir) == "in") {
                std::lock_guard g(tap_mu);
                inbound.push_back(line);
            }
        };
        sensor::FleetRuntime tapped(bench.net, cfg);
        tapped.spawn_sensor(spec);
        REQUIRE(bench.orchestrator->wait_traces(1, 240'000ms));
        REQUIRE(bench.trace_for("S-A1").status == SessionStatus::configured);
        tapped.stop_all();
        std::lock_guard g(tap_mu);
        sequences[std::string(to_string(kind))] = inbound;
    }
    if (sequences["tcp"] != sequences["udp"] || sequences["tcp"] != sequences["channel"]) {
        for (const auto& [kind, seq] : sequences) {
            MESSAGE("sequence over " << kind << ":");
            for (const auto& line : seq) MESSAGE("  " << line.substr(0, line.size() - 1));
        }
    }
    CHECK(sequences["tcp"] == sequences["udp"]);
    CHECK(sequences["tcp"] == sequences["channel"]);
    CHECK(!sequences["tcp"].empty());
}
