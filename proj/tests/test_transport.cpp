#include <doctest.h>

#include <atomic>
#include <thread>

#include "caddot/transport/transport.hpp"
#include "caddot/transport/udp.hpp"

using namespace caddot;
using namespace caddot::transport;
using namespace std::chrono_literals;

namespace {

BeaconSpec spec_for(TransportKind kind, int announce_port, const std::string& zone = "default") {
    BeaconSpec s;
    s.kind = kind;
    s.announce_port = announce_port;
    s.zone = zone;
    s.interval = 50ms;
    return s;
}

// Ephemeral announce port shared between beacon and scanners within a test.
int pick_port(Transport& t) {
    // Binding port 0 in the bus allocates one; reuse its chosen port.
    static std::atomic<int> base{23400};
    return base.fetch_add(1);
}

}  // namespace

TEST_CASE("channel beacon, scan, connect, exchange") {
    SystemClock clock;
    Transport net(clock);
    auto beacon = net.open_beacon(spec_for(TransportKind::channel, 0, "room-3"));

    CHECK(net.scan(TransportKind::channel, 1ms, 0, "elsewhere").empty());

    auto found = net.scan(TransportKind::channel, 120ms, 0, "room-3");
    REQUIRE(found.size() == 1);
    CHECK(found[0] == Endpoint{TransportKind::channel, "room-3"});

    auto client = net.connect(found[0]);
    auto server = beacon->accept(500ms);
    client->send("[WHO]\n");
    CHECK(server->recv(500ms) == "[WHO]\n");
    server->send("[IAM][id=S-1][model=M][mfr=A]\n");
    CHECK(client->recv(500ms) == "[IAM][id=S-1][model=M][mfr=A]\n");

    client->close();
    CHECK_THROWS_WITH_AS(client->send("[WHO]\n"), doctest::Contains("SessionClosed"),
                         TransportError);
    // Peer sees the close once drained.
    CHECK_THROWS_AS(server->recv(200ms), TransportError);
}

TEST_CASE("tcp beacon announces and sessions exchange lines") {
    SystemClock clock;
    Transport net(clock);
    int announce_port = pick_port(net);
    auto beacon = net.open_beacon(spec_for(TransportKind::tcp, announce_port));

    auto found = net.scan(TransportKind::tcp, 150ms, announce_port);
    REQUIRE(found.size() == 1);
    CHECK(found[0].kind == TransportKind::tcp);

    auto client = net.connect(found[0]);
    auto server = beacon->accept(1000ms);
    client->send("[DAR][PL]\n");
    CHECK(server->recv(1000ms) == "[DAR][PL]\n");
    server->send("[RDG][id=s][phen=t][value=1.000][unit=C][ts=0]\n");
    CHECK(client->recv(1000ms).rfind("[RDG]", 0) == 0);

    // Second beacon on the same session port: AddressInUse.
    BeaconSpec dup = spec_for(TransportKind::tcp, announce_port);
    auto hp = split_host_port(beacon->session_endpoint().address);
    REQUIRE(hp.has_value());
    dup.session_port = hp->second;
    try {
        auto b2 = net.open_beacon(dup);
        FAIL("expected AddressInUse");
    } catch (const TransportError& e) {
        CHECK(e.code() == TransportErrc::address_in_use);
    }
}

TEST_CASE("udp sessions run stop-and-wait reliability") {
    SystemClock clock;
    Transport net(clock);
    int announce_port = pick_port(net);
    auto beacon = net.open_beacon(spec_for(TransportKind::udp, announce_port));

    auto found = net.scan(TransportKind::udp, 150ms, announce_port);
    REQUIRE(found.size() == 1);

    auto client = net.connect(found[0]);
    auto server = beacon->accept(1000ms);

    for (int i = 0; i < 20; ++i) {
        client->send("[CON][SMP][" + std::to_string(i + 1) + "]\n");
    }
    for (int i = 0; i < 20; ++i) {
        CHECK(server->recv(1000ms) == "[CON][SMP][" + std::to_string(i + 1) + "]\n");
    }
}

TEST_CASE("udp retransmission recovers dropped frames") {
    SystemClock clock;
    Transport net(clock);
    UdpListener listener(clock, "127.0.0.1", 0);
    auto hp = split_host_port(listener.local().address);
    REQUIRE(hp.has_value());

    // Drop the first transmission of every data frame.
    std::atomic<int> drops{0};
    std::string last_dropped;
    auto drop = [&](const std::string& frame) {
        if (frame.rfind("D ", 0) == 0 && frame != last_dropped) {
            last_dropped = frame;
            drops++;
            return true;
        }
        return false;
    };
    auto client = udp_connect(clock, hp->first, hp->second, {}, drop);
    auto server = listener.accept(1000ms);

    client->send("[WHO]\n");
    client->send("[DAR][PL]\n");
    CHECK(server->recv(2000ms) == "[WHO]\n");
    CHECK(server->recv(2000ms) == "[DAR][PL]\n");
    CHECK(drops.load() == 2);
}

TEST_CASE("udp connect to dead port is refused") {
    SystemClock clock;
    Transport net(clock);
    try {
        auto s = net.connect({TransportKind::udp, "127.0.0.1:1"});
        FAIL("expected ConnectionRefused");
    } catch (const TransportError& e) {
        CHECK(e.code() == TransportErrc::connection_refused);
    }
}

TEST_CASE("tcp connect to dead port is refused") {
    SystemClock clock;
    Transport net(clock);
    CHECK_THROWS_AS((void)net.connect({TransportKind::tcp, "127.0.0.1:1"}), TransportError);
}

TEST_CASE("recv times out on a silent peer") {
    SystemClock clock;
    Transport net(clock);
    auto beacon = net.open_beacon(spec_for(TransportKind::channel, 0, "quiet"));
    auto client = net.connect({TransportKind::channel, "quiet"});
    try {
        (void)client->recv(100ms);
        FAIL("expected Timeout");
    } catch (const TransportError& e) {
        CHECK(e.code() == TransportErrc::timeout);
    }
}

TEST_CASE("scan honors the modeled scan delay in simulated time") {
    SimClock clock({.auto_advance = true, .grace = std::chrono::microseconds(500)});
    LatencyModel model;
    model.channel.scan = DelaySpec::fixed(5000ms);
    Transport net(clock, model, 1);
    auto beacon = net.open_beacon(spec_for(TransportKind::channel, 0, "zone"));

    std::int64_t took = -1;
    std::thread scanner([&] {
        Clock::Participation p(clock);
        auto t0 = clock.now();
        auto found = net.scan(TransportKind::channel, 100ms, 0, "zone");
        took = (clock.now() - t0).count();
        CHECK(!found.empty());
    });
    scanner.join();
    CHECK(took == 5000);
}

TEST_CASE("per-message latency delays but never reorders") {
    SimClock clock({.auto_advance = true, .grace = std::chrono::microseconds(500)});
    LatencyModel model;
    model.channel.per_message = DelaySpec::uniform(10ms, 500ms);
    Transport net(clock, model, 7);
    auto beacon = net.open_beacon(spec_for(TransportKind::channel, 0, "z"));

    std::thread consumer([&] {
        Clock::Participation p(clock);
        auto server = beacon->accept(2000ms);
        for (int i = 0; i < 30; ++i) {
            auto line = server->recv(30'000ms);
            CHECK(line == "[CON][SMP][" + std::to_string(i + 1) + "]\n");
        }
    });
    std::thread producer([&] {
        Clock::Participation p(clock);
        auto client = net.connect({TransportKind::channel, "z"});
        for (int i = 0; i < 30; ++i) {
            client->send("[CON][SMP][" + std::to_string(i + 1) + "]\n");
        }
        // Keep the session alive until the consumer drains it.
        clock.sleep_for(20'000ms);
    });
    consumer.join();
    producer.join();
}

TEST_CASE("mobile beacon moves between zones") {
    SystemClock clock;
    Transport net(clock);
    auto beacon = net.open_beacon(spec_for(TransportKind::channel, 0, "zone-a"));

    CHECK(net.scan(TransportKind::channel, 120ms, 0, "zone-a").size() == 1);
    CHECK(net.scan(TransportKind::channel, 120ms, 0, "zone-b").empty());

    beacon->set_zone("zone-b");
    CHECK(net.scan(TransportKind::channel, 120ms, 0, "zone-b").size() == 1);
    CHECK(net.scan(TransportKind::channel, 120ms, 0, "zone-a").empty());
}
