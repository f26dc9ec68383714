#include <doctest.h>

#include "caddot/protocol/command.hpp"
#include "caddot/protocol/message.hpp"
#include "support/generators.hpp"

using namespace caddot::protocol;

namespace {

template <class T>
const T& ok(const Decoded<T>& d) {
    REQUIRE_MESSAGE(!is_error(d), std::get<WireError>(d).detail);
    return std::get<T>(d);
}

template <class T>
WireErrc errc(const Decoded<T>& d) {
    REQUIRE(is_error(d));
    return std::get<WireError>(d).code;
}

}  // namespace

TEST_CASE("segment escaping round-trips awkward payloads") {
    std::string raw = "a[b]c%d\ne\rf";
    auto esc = escape_segment(raw);
    CHECK(esc.find('[') == std::string::npos);
    CHECK(esc.find(']') == std::string::npos);
    CHECK(esc.find('\n') == std::string::npos);
    CHECK(std::get<std::string>(unescape_segment(esc)) == raw);
}

TEST_CASE("split rejects malformed bracketing") {
    CHECK(errc(split_segments("")) == WireErrc::malformed_line);
    CHECK(errc(split_segments("WHO")) == WireErrc::malformed_line);
    CHECK(errc(split_segments("[WHO")) == WireErrc::malformed_line);
    CHECK(errc(split_segments("[WHO]junk[X]")) == WireErrc::malformed_line);
    CHECK(errc(split_segments("[WHO] ")) == WireErrc::malformed_line);
    CHECK(errc(split_segments("[a%zz]")) == WireErrc::malformed_line);
}

TEST_CASE("command wire forms") {
    CHECK(encode_command(Who{}) == "[WHO]\n");
    CHECK(encode_command(SetSamplingRate{std::chrono::seconds(10)}) == "[CON][SMP][10]\n");
    CHECK(encode_command(TemporaryPush{std::chrono::seconds(10), std::chrono::seconds(60),
                                       std::chrono::seconds(600)}) ==
          "[DAR][PS][10][60][600]\n");
    CHECK(encode_command(Stop{}) == "[CON][STP]\n");
    CHECK(encode_command(SchedulePush{}) == "[DAR][SC]\n");
    CHECK(encode_command(GetProfile{}) == "[CON][CPR]\n");
}

TEST_CASE("every command's first segment is a three-letter tag") {
    caddot::testgen::Gen gen(7);
    for (int i = 0; i < 500; ++i) {
        auto line = encode_command(gen.command());
        auto segs = ok(split_segments(line));
        CHECK(is_three_letter_tag(segs[0]));
    }
}

TEST_CASE("decode_command on canonical examples") {
    CHECK(ok(decode_command("[DAR][PL]\n")) == Command{Pull{}});
    auto net = ok(decode_command("[CON][NET][lab-wifi][s3cret][127.0.0.1][9100][tok-1]\n"));
    auto& sn = std::get<SetNetwork>(net);
    CHECK(sn.net.access_point == "lab-wifi");
    CHECK(sn.net.auth_key == "s3cret");
    CHECK(sn.net.sink_address == "127.0.0.1");
    CHECK(sn.net.sink_port == 9100);
    CHECK(sn.net.credential_token == "tok-1");
}

TEST_CASE("decode_command typed errors") {
    CHECK(errc(decode_command("[XYZ]\n")) == WireErrc::unknown_tag);
    CHECK(errc(decode_command("[WHO][extra]\n")) == WireErrc::bad_arity);
    CHECK(errc(decode_command("[DAR][PS][10][60]\n")) == WireErrc::bad_arity);
    CHECK(errc(decode_command("[CON][SMP][0]\n")) == WireErrc::bad_value);
    CHECK(errc(decode_command("[CON][SMP][-5]\n")) == WireErrc::bad_value);
    CHECK(errc(decode_command("[CON][SMP][ten]\n")) == WireErrc::bad_value);
    CHECK(errc(decode_command("[CON][NET][ap][key][host][99999][tok]\n")) ==
          WireErrc::bad_value);
    CHECK(errc(decode_command("[CON][PS]\n")) == WireErrc::unknown_tag);
    CHECK(errc(decode_command("not brackets")) == WireErrc::malformed_line);
}

TEST_CASE("command round-trip property") {
    caddot::testgen::Gen gen(42);
    for (int i = 0; i < 2000; ++i) {
        auto cmd = gen.command();
        REQUIRE(command_valid(cmd));
        auto back = decode_command(encode_command(cmd));
        REQUIRE_MESSAGE(!is_error(back), std::get<WireError>(back).detail);
        CHECK(std::get<Command>(back) == cmd);
    }
}

TEST_CASE("message wire forms") {
    Identity ident{{"S-017", "TH-02", "ACME"}, {}};
    CHECK(encode_message(Message{ident}) == "[IAM][id=S-017][model=TH-02][mfr=ACME]\n");
    CHECK(encode_message(Message{Ack{CommandTag::set_sampling_rate}}) == "[ACK][SMP]\n");
    auto msg = ok(decode_message("[ACK][SMP]\n"));
    CHECK(std::get<Ack>(msg).of == CommandTag::set_sampling_rate);
}

TEST_CASE("identity decode requires the minimal triple") {
    CHECK(errc(decode_message("[IAM][id=S-1][model=M-1]\n")) == WireErrc::bad_value);
    CHECK(errc(decode_message("[IAM][id=S-1][id=S-2][model=M][mfr=A]\n")) ==
          WireErrc::bad_value);
    auto m = ok(decode_message("[IAM][id=S-1][model=M][mfr=A][boot_ms=120]\n"));
    auto& ident = std::get<Identity>(m);
    CHECK(ident.extras.size() == 1);
    CHECK(ident.extras[0] == std::pair<std::string, std::string>{"boot_ms", "120"});
}

TEST_CASE("message decode typed errors") {
    CHECK(errc(decode_message("[QQQ][x=1]\n")) == WireErrc::unknown_tag);
    CHECK(errc(decode_message("[ACK][WAT]\n")) == WireErrc::bad_value);
    CHECK(errc(decode_message("[ERR][NotACode][d]\n")) == WireErrc::bad_value);
    CHECK(errc(decode_message("[RDG][id=s][phen=p][value=x][unit=u][ts=0]\n")) ==
          WireErrc::bad_value);
    CHECK(errc(decode_message("[IAM][nokey]\n")) == WireErrc::bad_value);
}

TEST_CASE("message round-trip property") {
    caddot::testgen::Gen gen(1234);
    for (int i = 0; i < 2000; ++i) {
        auto msg = gen.message();
        REQUIRE(message_valid(msg));
        auto back = decode_message(encode_message(msg));
        REQUIRE_MESSAGE(!is_error(back), std::get<WireError>(back).detail);
        CHECK(std::get<Message>(back) == msg);
    }
}

TEST_CASE("malformed corpus never crashes, always typed errors") {
    caddot::testgen::Gen gen(99);
    std::vector<std::string> corpus = {
        "",     "\n",     "[",       "]",        "[]",    "[][]\n", "[WHO]]",
        "x[Y]", "[W H]z", "[%]\n",   "[%5]\n",   "[%QQ]", "[CON]", "[DAR]\n",
        "[ACK]\n", "[ERR][BadValue]\n", "[RDG][id=]\n",
    };
    for (int i = 0; i < 500; ++i) {
        // Random byte soup, bracket heavy.
        std::string junk;
        int len = gen.range(1, 30);
        for (int j = 0; j < len; ++j) {
            junk += static_cast<char>(gen.range(32, 126));
        }
        corpus.push_back(junk);
    }
    for (const auto& line : corpus) {
        auto c = decode_command(line);
        auto m = decode_message(line);
        if (!is_error(c)) {
            // Anything decodable must re-encode to a canonical line.
            CHECK(!encode_command(std::get<Command>(c)).empty());
        }
        if (!is_error(m)) {
            CHECK(!encode_message(std::get<Message>(m)).empty());
        }
    }
}

TEST_CASE("decode closure: only the ten command tags are accepted") {
    // Heads other than WHO/DAR/CON are rejected as UnknownTag.
    for (std::string head : {"IAM", "PRF", "ACK", "ERR", "RDG", "HLO", "EOC", "ABC"}) {
        auto r = decode_command("[" + head + "]\n");
        CHECK(is_error(r));
    }
}
