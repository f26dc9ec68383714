// caddot: discovery-and-configuration toolkit CLI.
//
// Subcommands: registry, configure, fleet, experiment run, audit. Each module
// is runnable standalone for debugging; `experiment run` reproduces the
// bundled experiments end to end in one process.

#include <csignal>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "caddot/configurator/orchestrator.hpp"
#include "caddot/harness/runner.hpp"
#include "caddot/registry/client.hpp"
#include "caddot/sensor/runtime.hpp"

using namespace caddot;
using namespace std::chrono_literals;

namespace {

volatile std::sig_atomic_t g_stop = 0;

void on_signal(int) {
    g_stop = 1;
}

std::string default_fixtures() {
    if (const char* env = std::getenv("CADDOT_FIXTURES")) return env;
    return "fixtures";
}

int run_registry(const std::string& host, int api_port, int sink_port,
                 const std::string& store_file, const std::string& schedules_dir,
                 const std::string& plugins_dir, const std::string& run_dir) {
    SystemClock clock;
    transport::Transport net(clock);

    auto store = registry::Store::load_file(store_file, schedules_dir);
    if (auto* err = std::get_if<registry::StoreParseError>(&store)) {
        std::cerr << "store: line " << err->line << ": " << err->detail << "\n";
        return 3;
    }
    auto catalog = plugin::Catalog::load_dir(plugins_dir);
    if (auto* err = std::get_if<std::string>(&catalog)) {
        std::cerr << "plugins: " << *err << "\n";
        return 3;
    }

    registry::RegistryConfig cfg;
    cfg.host = host;
    cfg.api_port = api_port;
    cfg.sink_port = sink_port;
    cfg.run_dir = run_dir;
    registry::RegistryService service(net, cfg, std::move(std::get<registry::Store>(store)),
                                      std::move(std::get<plugin::Catalog>(catalog)));
    service.start();
    std::cout << "registry api on " << service.api_endpoint().address << ", sink on "
              << service.sink_endpoint().address << "\n";
    while (!g_stop) std::this_thread::sleep_for(200ms);
    service.stop();
    return 0;
}

int run_configure(transport::TransportKind kind, const std::string& host, int session_port,
                  int announce_port, const std::string& registry_api,
                  const std::string& plugins_dir, int parallelism,
                  std::chrono::seconds linger) {
    SystemClock clock;
    transport::Transport net(clock);
    registry::Client client(net, {transport::TransportKind::tcp, registry_api});
    plugin::AdapterHost host_plugins(plugins_dir);

    // The sink endpoint handed out in C8 comes from the registry process; by
    // convention its port is the api port + 1 unless overridden later.
    auto hp = transport::split_host_port(registry_api);
    if (!hp) {
        std::cerr << "bad registry endpoint " << registry_api << "\n";
        return 3;
    }

    configurator::OrchestratorConfig cfg;
    transport::BeaconSpec beacon;
    beacon.kind = kind;
    beacon.session_host = host;
    beacon.session_port = session_port;
    beacon.announce_host = host;
    beacon.announce_port = announce_port;
    cfg.beacons = {beacon};
    cfg.parallelism = parallelism;
    cfg.pipeline.registry = &client;
    cfg.pipeline.host = &host_plugins;
    cfg.pipeline.sink_host = hp->first;
    cfg.pipeline.sink_port = hp->second + 1;

    configurator::Orchestrator orchestrator(net, cfg);
    try {
        orchestrator.start();
    } catch (const transport::TransportError& e) {
        std::cerr << e.what() << "\n";
        return 3;
    }
    std::cout << "beaconing " << to_string(kind) << " sessions, announce port "
              << announce_port << "\n";

    auto deadline = clock.now() + std::chrono::duration_cast<std::chrono::milliseconds>(linger);
    std::size_t reported = 0;
    while (!g_stop && (linger.count() == 0 || clock.now() < deadline)) {
        std::this_thread::sleep_for(200ms);
        auto traces = orchestrator.traces();
        for (; reported < traces.size(); ++reported) {
            const auto& t = traces[reported];
            std::cout << t.sensor_id << ": "
                      << (t.status == configurator::SessionStatus::configured
                              ? "CONFIGURED"
                              : "FAILED(" + std::to_string(t.failed_step) + ", " +
                                    t.fail_reason + ")")
                      << "\n";
        }
    }
    orchestrator.stop();
    bool any_failed = false;
    for (const auto& t : orchestrator.traces()) {
        any_failed |= t.status != configurator::SessionStatus::configured;
    }
    return any_failed ? 2 : 0;
}

int run_fleet(const std::string& fleet_file, transport::TransportKind kind,
              int announce_port, const std::string& epoch_day, const std::string& epoch_time) {
    SystemClock clock;
    transport::Transport net(clock);

    auto fleet = sensor::load_fleet_file(fleet_file);
    if (auto* err = std::get_if<sensor::FleetParseError>(&fleet)) {
        std::cerr << "fleet: line " << err->line << ": " << err->detail << "\n";
        return 3;
    }

    sensor::SensorNetConfig cfg;
    cfg.kind = kind;
    cfg.announce_port = announce_port;
    auto day = protocol::weekday_from_string(epoch_day);
    if (!day) {
        std::cerr << "bad epoch weekday " << epoch_day << "\n";
        return 3;
    }
    cfg.calendar.epoch_weekday = *day;
    cfg.calendar.epoch_time = {std::stoi(epoch_time.substr(0, 2)) * 60 +
                               std::stoi(epoch_time.substr(3))};

    sensor::FleetRuntime sensors(net, cfg);
    for (const auto& spec : std::get<std::vector<sensor::SensorSpec>>(fleet)) {
        sensors.spawn_sensor(spec);
    }
    std::cout << "fleet up: " << std::get<std::vector<sensor::SensorSpec>>(fleet).size()
              << " sensors scanning " << to_string(kind) << " announce port "
              << announce_port << "\n";
    while (!g_stop) std::this_thread::sleep_for(200ms);
    sensors.stop_all();
    return 0;
}

int run_experiment_cmd(const std::string& name_or_file, const std::string& fixtures,
                       const std::string& out_dir, bool emulate, bool deterministic,
                       bool no_deterministic, std::optional<std::uint64_t> seed,
                       const std::vector<std::string>& transports) {
    std::string path = name_or_file;
    if (!std::filesystem::exists(path)) {
        path = fixtures + "/experiments/" + name_or_file + ".json";
    }
    auto parsed = harness::load_experiment(path);
    if (auto* err = std::get_if<harness::ExperimentParseError>(&parsed)) {
        std::cerr << "experiment: " << err->detail << "\n";
        return 3;
    }

    harness::RunOptions opts;
    opts.out_dir = out_dir;
    if (emulate) opts.emulate_latency = true;
    if (deterministic) opts.deterministic = true;
    if (no_deterministic) opts.deterministic = false;
    if (seed) opts.seed = seed;
    if (!transports.empty()) {
        std::vector<transport::TransportKind> kinds;
        for (const auto& t : transports) {
            auto kind = transport::transport_kind_from_string(t);
            if (!kind) {
                std::cerr << "unknown transport " << t << "\n";
                return 3;
            }
            kinds.push_back(*kind);
        }
        opts.transports = kinds;
    }

    auto result = harness::run_experiment(std::get<harness::Experiment>(parsed), opts);
    if (auto* err = std::get_if<harness::RunError>(&result)) {
        std::cerr << err->detail << "\n";
        return err->exit_code;
    }
    const auto& report = std::get<harness::Report>(result);
    std::cout << harness::table_text(report);
    if (!out_dir.empty()) {
        std::cout << "artifacts in " << out_dir << "\n";
    }
    if (report.total_failed() > 0 || !report.all_audits_pass() || !report.auth_clean) {
        return 2;
    }
    return 0;
}

int run_audit(const std::string& run_dir, const std::string& sensor) {
    auto result = harness::audit_run_dir(run_dir, sensor);
    for (const auto& line : result.lines) std::cout << line << "\n";
    return result.ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);

    CLI::App app{"caddot: context-aware dynamic sensor discovery and configuration"};
    app.require_subcommand(1);

    // registry
    auto* reg = app.add_subcommand("registry", "run the registry + sink service");
    std::string host = "127.0.0.1";
    int api_port = 7400, sink_port = 7401;
    std::string store_file, schedules_dir = "fixtures/schedules",
                plugins_dir = default_fixtures() + "/plugins", run_dir = "out/registry";
    reg->add_option("--host", host);
    reg->add_option("--api-port", api_port);
    reg->add_option("--sink-port", sink_port);
    reg->add_option("--store", store_file)->required();
    reg->add_option("--schedules", schedules_dir);
    reg->add_option("--plugins", plugins_dir);
    reg->add_option("--run-dir", run_dir);

    // configure
    auto* conf = app.add_subcommand("configure", "run the configurator (beacon + pipelines)");
    std::string transport_name = "tcp";
    int session_port = 7500, announce_port = 7490, parallelism = 8;
    std::string registry_api = "127.0.0.1:7400";
    long linger_s = 0;
    conf->add_option("--transport", transport_name)->check(CLI::IsMember({"tcp", "udp"}));
    conf->add_option("--host", host);
    conf->add_option("--listen-port", session_port);
    conf->add_option("--announce-port", announce_port);
    conf->add_option("--registry", registry_api);
    conf->add_option("--plugins", plugins_dir);
    conf->add_option("--parallelism", parallelism)->check(CLI::PositiveNumber);
    conf->add_option("--linger", linger_s, "stop after this many seconds (0 = run until ^C)");

    // fleet
    auto* fl = app.add_subcommand("fleet", "run a virtual sensor fleet");
    std::string fleet_file;
    std::string epoch_day = "MON", epoch_time = "08:00";
    fl->add_option("--file", fleet_file)->required();
    fl->add_option("--transport", transport_name)->check(CLI::IsMember({"tcp", "udp"}));
    fl->add_option("--announce-port", announce_port);
    fl->add_option("--epoch-day", epoch_day);
    fl->add_option("--epoch-time", epoch_time);

    // experiment run
    auto* exp = app.add_subcommand("experiment", "experiment tooling");
    auto* exp_run = exp->add_subcommand("run", "run a bundled or file-based experiment");
    std::string exp_name, fixtures = default_fixtures(), out_dir;
    bool emulate = false, det = false, no_det = false;
    std::uint64_t seed_value = 0;
    bool seed_set = false;
    std::vector<std::string> transports;
    exp_run->add_option("name", exp_name, "bundled name or path to a .json definition")
        ->required();
    exp_run->add_option("--fixtures", fixtures);
    exp_run->add_option("--out", out_dir);
    exp_run->add_flag("--emulate-latency", emulate);
    exp_run->add_flag("--deterministic", det);
    exp_run->add_flag("--no-deterministic", no_det);
    exp_run->add_option("--seed", seed_value)->each([&](const std::string&) { seed_set = true; });
    exp_run->add_option("--transports", transports)->delimiter(',');

    // audit
    auto* aud = app.add_subcommand("audit", "re-check cadence audits of a stored run");
    std::string audit_dir, audit_sensor;
    aud->add_option("--run-dir", audit_dir)->required();
    aud->add_option("--sensor", audit_sensor);

    CLI11_PARSE(app, argc, argv);

    if (*reg) {
        return run_registry(host, api_port, sink_port, store_file, schedules_dir,
                            plugins_dir, run_dir);
    }
    if (*conf) {
        auto kind = transport::transport_kind_from_string(transport_name);
        return run_configure(*kind, host, session_port, announce_port, registry_api,
                             plugins_dir, parallelism, std::chrono::seconds(linger_s));
    }
    if (*fl) {
        auto kind = transport::transport_kind_from_string(transport_name);
        return run_fleet(fleet_file, *kind, announce_port, epoch_day, epoch_time);
    }
    if (*exp_run) {
        return run_experiment_cmd(exp_name, fixtures, out_dir, emulate, det, no_det,
                                  seed_set ? std::optional<std::uint64_t>(seed_value)
                                           : std::nullopt,
                                  transports);
    }
    if (*aud) {
        return run_audit(audit_dir, audit_sensor);
    }
    return 3;
}
