#include <doctest.h>

#include "caddot/registry/client.hpp"
#include "caddot/registry/planner.hpp"
#include "caddot/registry/service.hpp"
#include "support/generators.hpp"

using namespace caddot;
using namespace caddot::registry;
using namespace caddot::protocol;
using namespace std::chrono_literals;

namespace {

Store fixture_store() {
    std::string text =
        "S-017\tTH-02\tACME\tacme-th\ttemperature\t20\t60\t-\t-\n"
        "S-018\tHM-01\tACME\tacme-hm\thumidity\t30\t60\t-\tS-017\n"
        "S-019\tPX-9\tSensorix\t\tproximity\t15\t45\t-\t-\n";
    auto parsed = Store::parse(text, "");
    REQUIRE(std::holds_alternative<Store>(parsed));
    return std::get<Store>(parsed);
}

plugin::Catalog fixture_catalog() {
    plugin::Catalog c;
    plugin::AdapterDescriptor acme_th;
    acme_th.plugin_id = "acme-th";
    acme_th.dialect = "A";
    acme_th.version = 2;
    acme_th.matches = {{"ACME", "TH-*"}};
    c.add(acme_th);
    plugin::AdapterDescriptor acme_hm;
    acme_hm.plugin_id = "acme-hm";
    acme_hm.dialect = "B";
    acme_hm.matches = {{"ACME", "HM-01"}};
    c.add(acme_hm);
    plugin::AdapterDescriptor sx;
    sx.plugin_id = "sx-any";
    sx.dialect = "C";
    sx.matches = {{"Sensorix", "*"}};
    c.add(sx);
    return c;
}

SensorProfile profile_for(const SensorIdentity& id) {
    SensorProfile p;
    p.identity = id;
    p.phenomena = {{"temperature", "C"}};
    p.supported_modes = {Acquisition::pull, Acquisition::push_interval,
                         Acquisition::push_schedule};
    p.strategy.sampling_rate = 10s;
    p.strategy.comm_frequency = 60s;
    p.strategy.acquisition = Acquisition::pull;
    return p;
}

SensorRecord frost_record(std::string id, std::string peer,
                          std::vector<std::string> measures) {
    SensorRecord r;
    r.identity = {std::move(id), "M", "ACME"};
    r.measures = std::move(measures);
    r.base_rate = 20s;
    r.base_freq = 60s;
    r.peer_temperature = std::move(peer);
    auto sched = parse_schedule("MON-SUN 00:00-23:59 rate=20 freq=60\n");
    r.base_schedule = std::get<Schedule>(sched);
    return r;
}

}  // namespace

// ── Planner rules ────────────────────────────────────────────────────────────

TEST_CASE("R2: humidity sensor sleeps when its temperature peer is out") {
    auto record = frost_record("S-H", "S-T", {"humidity"});
    Context ctx;
    ctx.peer_status["S-T"] = PeerStatus::faulty;
    auto s = plan_strategy(record, ctx);
    CHECK(s.acquisition == Acquisition::stop);

    ctx.peer_status["S-T"] = PeerStatus::absent;
    CHECK(plan_strategy(record, ctx).acquisition == Acquisition::stop);

    ctx.peer_status["S-T"] = PeerStatus::alive;
    CHECK(plan_strategy(record, ctx).acquisition == Acquisition::push_schedule);
}

TEST_CASE("R1: winter or night halves the base sampling interval") {
    auto record = frost_record("S-T", "", {"temperature"});
    Context ctx;
    ctx.season = Season::winter;
    ctx.time_of_day = DayPhase::night;
    CHECK(plan_strategy(record, ctx).sampling_rate == 10s);

    ctx.season = Season::winter;
    ctx.time_of_day = DayPhase::day;
    CHECK(plan_strategy(record, ctx).sampling_rate == 10s);

    ctx.season = Season::summer;
    ctx.time_of_day = DayPhase::night;
    CHECK(plan_strategy(record, ctx).sampling_rate == 10s);

    ctx.time_of_day = DayPhase::day;
    CHECK(plan_strategy(record, ctx).sampling_rate == 20s);
}

TEST_CASE("R3: default is schedule-gated pushing with the base schedule") {
    auto record = frost_record("S-T", "", {"temperature"});
    Context ctx;
    auto s = plan_strategy(record, ctx);
    CHECK(s.acquisition == Acquisition::push_schedule);
    REQUIRE(s.schedule.has_value());
    CHECK(*s.schedule == *record.base_schedule);
    CHECK(s.comm_frequency == 60s);
}

TEST_CASE("rule priority: R2 beats R1/R3 over all contexts") {
    auto record = frost_record("S-H", "S-T", {"humidity", "temperature"});
    for (auto season : {Season::summer, Season::winter, Season::spring, Season::autumn}) {
        for (auto tod : {DayPhase::day, DayPhase::night}) {
            for (auto peer : {PeerStatus::faulty, PeerStatus::absent}) {
                Context ctx;
                ctx.season = season;
                ctx.time_of_day = tod;
                ctx.peer_status["S-T"] = peer;
                auto s = plan_strategy(record, ctx);
                CHECK(s.acquisition == Acquisition::stop);
            }
        }
    }
}

TEST_CASE("plan_strategy is a pure function of record and context") {
    auto record = frost_record("S-H", "S-T", {"humidity"});
    Context ctx;
    ctx.season = Season::winter;
    auto a = plan_strategy(record, ctx);
    auto b = plan_strategy(record, ctx);
    CHECK(a == b);
}

// ── Store parsing ────────────────────────────────────────────────────────────

TEST_CASE("store fixture parses with pairings and plugin ids") {
    auto store = fixture_store();
    REQUIRE(store.size() == 3);
    auto* hum = store.find("S-018");
    REQUIRE(hum != nullptr);
    CHECK(hum->peer_temperature == "S-017");
    CHECK(hum->measures_phenomenon("humidity"));
    CHECK(hum->plugin_id == "acme-hm");
    CHECK(store.find("S-019")->plugin_id.empty());
}

TEST_CASE("store parse errors carry line numbers") {
    auto r = Store::parse("S-1\tM\tA\n", "");
    REQUIRE(std::holds_alternative<StoreParseError>(r));
    CHECK(std::get<StoreParseError>(r).line == 1);
}

// ── Service over the wire ────────────────────────────────────────────────────

struct ServiceRig {
    SystemClock clock;
    transport::Transport net{clock};
    RegistryService service;
    std::unique_ptr<Client> client_ptr;
    Client& client;

    ServiceRig()
        : service(net, RegistryConfig{}, fixture_store(), fixture_catalog()),
          client_ptr((service.start(),
                      std::make_unique<Client>(net, service.api_endpoint()))),
          client(*client_ptr) {}

    ~ServiceRig() { service.stop(); }
};

TEST_CASE("identify over the wire: known, unknown, idempotent") {
    ServiceRig rig;
    auto view = rig.client.identify({"S-017", "TH-02", "ACME"});
    CHECK(view.plugin_id == "acme-th");
    CHECK(view.status == RegistrationStatus::known);
    CHECK(view.base_rate == 20s);

    auto again = rig.client.identify({"S-017", "TH-02", "ACME"});
    CHECK(again.plugin_id == view.plugin_id);

    CHECK_THROWS_AS((void)rig.client.identify({"S-999", "X", "Y"}), RegistryError);
}

TEST_CASE("find_plugin honors explicit plugin ids and falls back to matching") {
    ServiceRig rig;
    CHECK(rig.client.find_plugin("S-017").plugin_id == "acme-th");
    // S-019 has no pinned plugin; catalog matching kicks in.
    CHECK(rig.client.find_plugin("S-019").plugin_id == "sx-any");
    CHECK_THROWS_AS((void)rig.client.find_plugin("S-999"), RegistryError);
}

TEST_CASE("registration mints and rotates tokens") {
    ServiceRig rig;
    SensorIdentity id{"S-017", "TH-02", "ACME"};
    auto strategy = plan_strategy(frost_record("S-017", "", {"temperature"}), Context{});

    auto first = rig.client.register_sensor("S-017", profile_for(id), strategy);
    CHECK(!first.token.empty());
    CHECK(rig.client.identify(id).status == RegistrationStatus::registered);

    auto second = rig.client.register_sensor("S-017", profile_for(id), strategy);
    CHECK(second.token != first.token);

    // Old token rejected, current accepted.
    Reading r{"S-017", "temperature", 20.0, "C", TimePoint{5}};
    CHECK(std::holds_alternative<Err>(rig.service.ingest_reading(first.token, r)));
    CHECK(std::holds_alternative<std::monostate>(
        rig.service.ingest_reading(second.token, r)));
    REQUIRE(rig.service.readings_for("S-017").size() == 1);
    CHECK(rig.service.readings_for("S-017")[0].reading == r);
    CHECK(rig.service.rejected_count() == 1);

    CHECK_THROWS_AS(
        (void)rig.client.register_sensor("S-999", profile_for(id), strategy),
        RegistryError);
}

TEST_CASE("sink never stores readings from unregistered sensors or bad tokens") {
    ServiceRig rig;
    Reading r{"S-019", "proximity", 1.0, "cm", TimePoint{1}};
    CHECK(std::holds_alternative<Err>(rig.service.ingest_reading("tk-whatever", r)));
    Reading u{"S-404", "x", 1.0, "u", TimePoint{1}};
    CHECK(std::holds_alternative<Err>(rig.service.ingest_reading("tk-whatever", u)));
    CHECK(rig.service.all_readings().empty());
    CHECK(rig.service.rejected_count() == 2);
}

TEST_CASE("schedule publish/fetch round-trips with literal credentials") {
    ServiceRig rig;
    std::string text = "MON-FRI 08:00-17:00 rate=10 freq=60\n";
    rig.client.publish_schedule("/schedules/S-017", "u-17", "p-17", text);

    CHECK(rig.client.fetch_schedule("/schedules/S-017", "u-17", "p-17") == text);

    try {
        (void)rig.client.fetch_schedule("/schedules/S-017", "u-17", "wrong");
        FAIL("expected AuthFailed");
    } catch (const RegistryError& e) {
        CHECK(e.code() == ErrCode::auth_failed);
    }
    try {
        (void)rig.client.fetch_schedule("/nope", "u", "p");
        FAIL("expected NotFound");
    } catch (const RegistryError& e) {
        CHECK(e.code() == ErrCode::not_found);
    }
}

TEST_CASE("context updates over the wire drive planning") {
    ServiceRig rig;
    Context ctx;
    ctx.season = Season::winter;
    rig.client.set_context(ctx);
    // S-019 has base 15 s and no schedule: winter halves to 7, pull fallback.
    auto planned = rig.client.plan("S-019");
    CHECK(planned.sampling_rate == 7s);
    CHECK(planned.acquisition == Acquisition::pull);

    Context frost;
    frost.peer_status["S-017"] = PeerStatus::faulty;
    rig.client.set_context(frost);
    // S-018 measures humidity paired with S-017.
    CHECK(rig.client.plan("S-018").acquisition == Acquisition::stop);
}

TEST_CASE("direct-connect watch times out without a sink connection") {
    ServiceRig rig;
    auto status = rig.client.wait_direct("S-017", 100ms);
    CHECK(!status.connected);
}

TEST_CASE("relay without a sink connection is unreachable") {
    ServiceRig rig;
    try {
        (void)rig.client.relay("S-017", "[WHO]", 100ms);
        FAIL("expected Unreachable");
    } catch (const RegistryError& e) {
        CHECK(e.code() == ErrCode::unreachable);
    }
}

TEST_CASE("strategy wire form round-trips") {
    testgen::Gen gen(31);
    for (int i = 0; i < 200; ++i) {
        auto s = gen.strategy();
        auto decoded = decode_strategy(encode_strategy(s));
        REQUIRE(std::holds_alternative<SensingStrategy>(decoded));
        CHECK(std::get<SensingStrategy>(decoded) == s);
    }
}
