#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "caddot/clock.hpp"
#include "caddot/protocol/command.hpp"
#include "caddot/protocol/types.hpp"
#include "caddot/protocol/wire.hpp"

namespace caddot::protocol {

// ── Messages ─────────────────────────────────────────────────────────────────
//
//   [IAM][id=..][model=..][mfr=..](extra key=value...)   identity (M1)
//   [PRF][...]                                           complete profile
//   [RDG][id=..][phen=..][value=..][unit=..][ts=..]      one reading
//   [ACK][<command tag>]                                 acknowledgement
//   [ERR][<code>][<detail>]                              typed error

// Identity reply. Extras are free-form key=value pairs (boot/scan telemetry
// and the like); order is preserved on the wire.
struct Identity {
    SensorIdentity who;
    std::vector<std::pair<std::string, std::string>> extras;

    bool operator==(const Identity&) const = default;
};

struct ProfileMsg {
    SensorProfile profile;

    bool operator==(const ProfileMsg&) const = default;
};

struct Reading {
    std::string sensor_id;
    std::string phenomenon;
    double value = 0.0;
    std::string unit;
    TimePoint timestamp;

    bool operator==(const Reading&) const = default;
};

struct Ack {
    CommandTag of = CommandTag::who;

    bool operator==(const Ack&) const = default;
};

enum class ErrCode {
    malformed_line,
    unknown_tag,
    bad_arity,
    bad_value,
    dialect_mismatch,
    fetch_unreachable,
    auth_failed,
    syntax_error,
    sink_refused,
    bad_token,
    not_found,
    unknown_sensor,
    no_adapter,
    plugin_unavailable,
    unreachable,
    busy,
};

std::string_view to_string(ErrCode code);
std::optional<ErrCode> err_code_from_string(std::string_view s);

struct Err {
    ErrCode code = ErrCode::malformed_line;
    std::string detail;

    bool operator==(const Err&) const = default;
};

using Message = std::variant<Identity, ProfileMsg, Reading, Ack, Err>;

bool message_valid(const Message& msg);

std::string encode_message(const Message& msg);
Decoded<Message> decode_message(std::string_view line);

// Formats a reading value the way the wire carries it (three decimals).
std::string format_value(double v);

}  // namespace caddot::protocol
