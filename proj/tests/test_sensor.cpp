#include <doctest.h>

#include "caddot/sensor/core.hpp"
#include "caddot/sensor/engine.hpp"
#include "caddot/sensor/fleet.hpp"
#include "support/cadence_oracle.hpp"
#include "support/generators.hpp"

using namespace caddot;
using namespace caddot::sensor;
using namespace caddot::protocol;
using namespace std::chrono_literals;

namespace {

SensorSpec temp_sensor(DialectId d = DialectId::A) {
    SensorSpec s;
    s.identity = {"S-017", "TH-02", "ACME"};
    s.phenomena = {{"temperature", "C", 11}};
    s.dialect = d;
    return s;
}

SensorSpec temp_hum_sensor() {
    auto s = temp_sensor();
    s.identity = {"S-018", "TH-03", "ACME"};
    s.phenomena = {{"temperature", "C", 11}, {"humidity", "%RH", 12}};
    return s;
}

struct EngineTally {
    long readings = 0;
    long batches = 0;
    std::vector<long> batch_sizes;
};

EngineTally drain(SensingEngine& engine, TimePoint upto, std::int64_t step_ms = 1000) {
    EngineTally t;
    auto take = [&](std::vector<std::vector<Reading>> batches) {
        for (auto& batch : batches) {
            t.batches++;
            t.batch_sizes.push_back(static_cast<long>(batch.size()));
            t.readings += static_cast<long>(batch.size());
        }
    };
    for (std::int64_t ms = 0; ms <= upto.ms; ms += step_ms) {
        take(engine.advance_to(TimePoint{ms}));
    }
    take(engine.advance_to(upto));
    return t;
}

Schedule weekday_schedule() {
    auto parsed = parse_schedule("MON-FRI 08:00-17:00 rate=10 freq=60\n");
    return std::get<Schedule>(parsed);
}

}  // namespace

// ── Sensing cadence ──────────────────────────────────────────────────────────

TEST_CASE("interval cadence matches the clock-walk oracle on the 10/60/120 example") {
    auto oracle = testgen::oracle_interval(1, 10, 60, 120);
    CHECK(oracle.readings == 12);
    CHECK(oracle.batches == 2);
    CHECK(oracle.batch_sizes == std::vector<long>{6, 6});

    SensingEngine engine(temp_sensor(), {});
    engine.arm_interval(TimePoint{0}, 10s, 60s, TimePoint{120'000});
    auto got = drain(engine, TimePoint{120'000});
    CHECK(got.readings == oracle.readings);
    CHECK(got.batches == oracle.batches);
    CHECK(got.batch_sizes == oracle.batch_sizes);
}

TEST_CASE("interval cadence equals the oracle across random configurations") {
    testgen::Gen gen(2024);
    for (int i = 0; i < 60; ++i) {
        long rate = gen.range(1, 40);
        long freq = gen.range(1, 90);
        long duration = gen.range(1, 400);
        int phen = gen.range(1, 3);

        SensorSpec spec = temp_sensor();
        spec.phenomena.clear();
        for (int p = 0; p < phen; ++p) {
            spec.phenomena.push_back({"p" + std::to_string(p), "u", 5 + (unsigned)p});
        }
        SensingEngine engine(spec, {});
        engine.arm_interval(TimePoint{0}, std::chrono::seconds(rate),
                            std::chrono::seconds(freq), TimePoint{duration * 1000});
        auto got = drain(engine, TimePoint{duration * 1000}, 700);  // uneven stepping
        auto want = testgen::oracle_interval(phen, rate, freq, duration);
        CAPTURE(rate);
        CAPTURE(freq);
        CAPTURE(duration);
        REQUIRE(got.batch_sizes == want.batch_sizes);
    }
}

TEST_CASE("push_temp expires after its duration") {
    SensingEngine engine(temp_sensor(), {});
    engine.arm_interval(TimePoint{0}, 10s, 60s, TimePoint{600'000});
    (void)engine.advance_to(TimePoint{600'000});
    CHECK(engine.expired());
    CHECK(!engine.armed());

    SensorCore core(temp_sensor());
    core.enter(Mode::push_temp);
    core.temp_expired();
    CHECK(core.mode() == Mode::listening);
}

TEST_CASE("schedule gating: weekday window emits nothing on Saturday") {
    // Epoch anchored at Saturday 09:00.
    SimCalendar cal{Weekday::sat, TimeOfDay{9 * 60}};
    SensingEngine engine(temp_sensor(), cal);
    engine.arm_schedule(TimePoint{0}, weekday_schedule());
    auto batches = engine.advance_to(TimePoint{3600'000});  // one simulated hour
    CHECK(batches.empty());
}

TEST_CASE("schedule cadence equals the oracle inside a window") {
    SimCalendar cal{Weekday::mon, TimeOfDay{8 * 60}};  // epoch Monday 08:00
    SensingEngine engine(temp_sensor(), cal);
    engine.arm_schedule(TimePoint{0}, weekday_schedule());
    long window = 600;
    auto got = drain(engine, TimePoint{window * 1000});
    auto want = testgen::oracle_schedule(1, weekday_schedule(), cal, 0, window);
    CHECK(got.batch_sizes == want.batch_sizes);
    CHECK(want.readings == 60);  // 600 s at one sample per 10 s
}

TEST_CASE("schedule cadence equals the oracle across random schedules and epochs") {
    testgen::Gen gen(555);
    for (int i = 0; i < 40; ++i) {
        auto schedule = gen.nonempty_schedule();
        SimCalendar cal{static_cast<Weekday>(gen.range(0, 6)),
                        TimeOfDay{gen.range(0, 1439)}};
        long arm = gen.range(0, 4000);
        long window = gen.range(100, 30'000);

        SensorSpec spec = temp_sensor();
        SensingEngine engine(spec, cal);
        engine.arm_schedule(TimePoint{arm * 1000}, schedule);
        EngineTally got;
        for (std::int64_t ms = arm * 1000; ms <= (arm + window) * 1000; ms += 1713) {
            for (auto& b : engine.advance_to(TimePoint{ms})) {
                got.batches++;
                got.batch_sizes.push_back(static_cast<long>(b.size()));
            }
        }
        for (auto& b : engine.advance_to(TimePoint{(arm + window) * 1000})) {
            got.batches++;
            got.batch_sizes.push_back(static_cast<long>(b.size()));
        }
        auto want = testgen::oracle_schedule(1, schedule, cal, arm, window);
        CAPTURE(i);
        CAPTURE(render_schedule(schedule));
        REQUIRE(got.batch_sizes == want.batch_sizes);
    }
}

// ── Command handling (pure core) ─────────────────────────────────────────────

TEST_CASE("WHO yields well-formed M1 in every non-booting state and dialect") {
    for (auto dialect : {DialectId::A, DialectId::B, DialectId::C}) {
        for (auto mode : {Mode::listening, Mode::push_temp, Mode::push_scheduled,
                          Mode::stopped, Mode::direct}) {
            SensorCore core(temp_sensor(dialect));
            core.enter(mode);
            auto r = core.handle_line("[WHO]\n", TimePoint{0});
            REQUIRE(r.replies.size() == 1);
            auto msg = decode_message(r.replies[0]);
            REQUIRE_MESSAGE(!is_error(msg), "dialect " << to_string(dialect) << " mode "
                                                       << to_string(mode));
            auto& ident = std::get<Identity>(std::get<Message>(msg));
            CHECK(ident.who == temp_sensor(dialect).identity);
            CHECK(core.mode() == mode);  // state unchanged
        }
    }
}

TEST_CASE("pull answers one reading and leaves state alone") {
    SensorCore core(temp_sensor());
    core.enter(Mode::listening);
    auto r = core.handle_line("[DAR][PL]\n", TimePoint{5000});
    REQUIRE(r.replies.size() == 1);
    auto msg = decode_message(r.replies[0]);
    auto& reading = std::get<Reading>(std::get<Message>(msg));
    CHECK(reading.sensor_id == "S-017");
    CHECK(reading.phenomenon == "temperature");
    CHECK(reading.timestamp.ms == 5000);
    CHECK(core.mode() == Mode::listening);
}

TEST_CASE("stop halts sensing but the listener stays alive") {
    SensorCore core(temp_sensor());
    core.enter(Mode::push_temp);
    auto r = core.handle_line("[CON][STP]\n", TimePoint{0});
    CHECK(r.replies[0] == "[ACK][STP]\n");
    CHECK(core.mode() == Mode::stopped);
    // Still answers profile afterwards.
    auto p = core.handle_line("[CON][CPR]\n", TimePoint{0});
    auto msg = decode_message(p.replies[0]);
    CHECK(std::holds_alternative<ProfileMsg>(std::get<Message>(msg)));
}

TEST_CASE("configuration commands update the strategy and read back") {
    SensorCore core(temp_sensor());
    core.enter(Mode::listening);
    CHECK(core.handle_line("[CON][SMP][10]\n", {}).replies[0] == "[ACK][SMP]\n");
    CHECK(core.handle_line("[CON][DCF][60]\n", {}).replies[0] == "[ACK][DCF]\n");
    CHECK(core.strategy().sampling_rate == 10s);
    CHECK(core.strategy().comm_frequency == 60s);

    auto msg = decode_message(core.handle_line("[CON][CPR]\n", {}).replies[0]);
    auto& profile = std::get<ProfileMsg>(std::get<Message>(msg)).profile;
    CHECK(profile.strategy.sampling_rate == 10s);
    CHECK(profile.strategy.comm_frequency == 60s);
}

TEST_CASE("inline schedule transfer applies immediately") {
    SensorCore core(temp_sensor());
    core.enter(Mode::listening);
    auto line = encode_command(Command{SetSchedule{
        {"inline", "MON-FRI 08:00-17:00 rate=10 freq=60\n", "-", "-"}}});
    auto r = core.handle_line(line, {});
    CHECK(r.replies[0] == "[ACK][SCH]\n");
    REQUIRE(core.schedule().has_value());
    CHECK(core.schedule()->entries.size() == 1);
    CHECK(core.strategy().acquisition == Acquisition::push_schedule);

    // Malformed inline text is rejected with a syntax error.
    auto bad = encode_command(Command{SetSchedule{{"inline", "NOPE", "-", "-"}}});
    auto rb = core.handle_line(bad, {});
    auto msg = decode_message(rb.replies[0]);
    CHECK(std::get<Err>(std::get<Message>(msg)).code == ErrCode::syntax_error);
}

TEST_CASE("C8 stores network settings and requests direct mode") {
    SensorCore core(temp_sensor());
    core.enter(Mode::listening);
    auto r = core.handle_line("[CON][NET][lab-wifi][s3cret][127.0.0.1][9100][tok-1]\n", {});
    CHECK(r.replies[0] == "[ACK][NET]\n");
    CHECK(r.effects.go_direct);
    REQUIRE(core.net().has_value());
    CHECK(core.net()->credential_token == "tok-1");

    core.confirm_direct();
    CHECK(core.mode() == Mode::direct);

    // Factory default strategy when configured out of order: pull at 60 s.
    CHECK(core.strategy().acquisition == Acquisition::pull);
    CHECK(core.strategy().sampling_rate == 60s);
}

TEST_CASE("sink refusal leaves the sensor listening with an Err report") {
    SensorCore core(temp_sensor());
    core.enter(Mode::listening);
    (void)core.handle_line("[CON][NET][ap][key][127.0.0.1][9100][bad]\n", {});
    auto err_line = core.direct_failed();
    auto msg = decode_message(err_line);
    CHECK(std::get<Err>(std::get<Message>(msg)).code == ErrCode::sink_refused);
    CHECK(core.mode() == Mode::listening);
    CHECK(!core.net().has_value());
}

TEST_CASE("unknown lines yield Err replies and unchanged state") {
    SensorCore core(temp_sensor());
    core.enter(Mode::listening);
    for (auto line : {"[XYZ]\n", "[CON][WAT][1]\n", "garbage\n", "[DAR][PS][1][2]\n"}) {
        auto r = core.handle_line(line, {});
        REQUIRE(r.replies.size() == 1);
        auto msg = decode_message(r.replies[0]);
        REQUIRE_MESSAGE(!is_error(msg), line);
        CHECK(std::holds_alternative<Err>(std::get<Message>(msg)));
        CHECK(core.mode() == Mode::listening);
    }
}

// ── Dialects ─────────────────────────────────────────────────────────────────

TEST_CASE("dialect B requires the handshake before every command") {
    SensorCore core(temp_sensor(DialectId::B));
    core.enter(Mode::listening);

    // Without [HLO]: dialect mismatch.
    auto r1 = core.handle_line("[CON][SRT][10]\n", {});
    auto m1 = decode_message(r1.replies[0]);
    CHECK(std::get<Err>(std::get<Message>(m1)).code == ErrCode::dialect_mismatch);

    // Handshake then the synonym tag works; ack uses the synonym too.
    auto hello = core.handle_line("[HLO]\n", {});
    CHECK(hello.replies[0] == "[ACK][HLO]\n");
    auto r2 = core.handle_line("[CON][SRT][10]\n", {});
    CHECK(r2.replies[0] == "[ACK][SRT]\n");
    CHECK(core.strategy().sampling_rate == 10s);

    // The canonical tag is not part of dialect B.
    (void)core.handle_line("[HLO]\n", {});
    auto r3 = core.handle_line("[CON][SMP][10]\n", {});
    auto m3 = decode_message(r3.replies[0]);
    CHECK(std::get<Err>(std::get<Message>(m3)).code == ErrCode::unknown_tag);

    // Handshake is consumed per command.
    auto r4 = core.handle_line("[CON][CFQ][30]\n", {});
    auto m4 = decode_message(r4.replies[0]);
    CHECK(std::get<Err>(std::get<Message>(m4)).code == ErrCode::dialect_mismatch);

    // WHO needs no handshake.
    auto r5 = core.handle_line("[WHO]\n", {});
    CHECK(decode_message(r5.replies[0]).index() == 0);
}

TEST_CASE("dialect C wants reversed segments with an EOC terminator") {
    SensorCore core(temp_sensor(DialectId::C));
    core.enter(Mode::listening);

    // Canonical form is a mismatch; the Err reply itself travels in dialect
    // form (reversed, EOC-terminated).
    auto r1 = core.handle_line("[CON][SMP][10]\n", {});
    auto unreversed = strip_eoc_unreverse(r1.replies[0]);
    REQUIRE(unreversed.has_value());
    auto m1 = decode_message(*unreversed);
    CHECK(std::get<Err>(std::get<Message>(m1)).code == ErrCode::dialect_mismatch);

    // Reversed-with-EOC form works; the reply is translated back the same way
    // and the connection is spent.
    auto r2 = core.handle_line("[CON][10][SMP][EOC]\n", {});
    CHECK(r2.replies[0] == "[ACK][SMP][EOC]\n");
    CHECK(r2.effects.close_connection);
    CHECK(core.strategy().sampling_rate == 10s);

    // Multi-payload reversal.
    core.codec().on_new_connection();
    auto r3 = core.handle_line("[DAR][600][60][10][PS][EOC]\n", {});
    CHECK(r3.replies[0] == "[ACK][PS][EOC]\n");
    REQUIRE(core.temp_push().has_value());
    CHECK(core.temp_push()->rate == 10s);
    CHECK(core.temp_push()->freq == 60s);
    CHECK(core.temp_push()->duration == 600s);

    // WHO is exempt in both directions.
    auto r4 = core.handle_line("[WHO]\n", {});
    CHECK(r4.replies[0].rfind("[IAM]", 0) == 0);
    CHECK(!r4.effects.close_connection);
}

TEST_CASE("line transforms for dialect C round-trip") {
    std::string canonical = "[CON][NET][ap][key][127.0.0.1][9100][tok]\n";
    auto dialect = reverse_after_tag_add_eoc(canonical);
    CHECK(dialect == "[CON][tok][9100][127.0.0.1][key][ap][NET][EOC]\n");
    auto back = strip_eoc_unreverse(dialect);
    REQUIRE(back.has_value());
    CHECK(*back == canonical);
    CHECK(!strip_eoc_unreverse(canonical).has_value());
}

// ── Fleet files ──────────────────────────────────────────────────────────────

TEST_CASE("fleet file round-trips") {
    std::string text =
        "# test fleet\n"
        "S-001\tTH-02\tACME\tA\tCPD\t0\tdefault\ttemperature:C:11,humidity:%RH:12\n"
        "S-002\tPX-9\tSensorix\tB\tCPD\t2\tzone-1\tproximity:cm:7\n"
        "S-003\tLegacy\tOldCo\tA\tSPD\t0\tdefault\ttemperature:C:3\n";
    auto parsed = parse_fleet(text);
    REQUIRE(std::holds_alternative<std::vector<SensorSpec>>(parsed));
    auto fleet = std::get<std::vector<SensorSpec>>(parsed);
    REQUIRE(fleet.size() == 3);
    CHECK(fleet[0].phenomena.size() == 2);
    CHECK(fleet[1].dialect == DialectId::B);
    CHECK(fleet[1].boot_delay == std::chrono::milliseconds(2000));
    CHECK(fleet[2].program == ProgramDesign::spd);

    auto rendered = render_fleet(fleet);
    auto again = parse_fleet(rendered);
    CHECK(std::get<std::vector<SensorSpec>>(again) == fleet);
}

TEST_CASE("fleet file errors carry line numbers") {
    auto r1 = parse_fleet("S-001\tM\tA\tA\tCPD\t0\tz\n");  // 7 fields
    CHECK(std::get<FleetParseError>(r1).line == 1);
    auto r2 = parse_fleet(
        "S-001\tM\tA\tA\tCPD\t0\tz\tt:C:1\n"
        "S-001\tM\tA\tA\tCPD\t0\tz\tt:C:1\n");
    CHECK(std::get<FleetParseError>(r2).line == 2);
    CHECK(std::get<FleetParseError>(r2).detail.find("duplicate") != std::string::npos);
}

TEST_CASE("multi-phenomenon sensors emit one reading per phenomenon per sample") {
    SensingEngine engine(temp_hum_sensor(), {});
    engine.arm_interval(TimePoint{0}, 10s, 60s, TimePoint{120'000});
    auto tally = drain(engine, TimePoint{120'000});
    CHECK(tally.readings == 24);
    CHECK(tally.batch_sizes == std::vector<long>{12, 12});
}
