#pragma once

#include <chrono>
#include <string>
#include <variant>

#include "caddot/protocol/types.hpp"
#include "caddot/protocol/wire.hpp"

namespace caddot::protocol {

// ── Commands ─────────────────────────────────────────────────────────────────
//
// The closed ten-command vocabulary spoken between configurator and sensor.
//
//   [WHO]                                  identity request
//   [DAR][PL]                              pull one reading
//   [DAR][PS][rate][freq][duration]        temporary interval push
//   [DAR][SC]                              schedule-driven push
//   [CON][SMP][rate]                       set sampling rate
//   [CON][DCF][freq]                       set communication frequency
//   [CON][SCH][server][path][user][pass]   set sensing schedule (fetchable)
//   [CON][NET][ap][key][addr][port][token] set network settings
//   [CON][STP]                             stop sensing
//   [CON][CPR]                             request complete profile

struct Who {
    bool operator==(const Who&) const = default;
};

struct Pull {
    bool operator==(const Pull&) const = default;
};

struct TemporaryPush {
    std::chrono::seconds sampling_rate{0};
    std::chrono::seconds comm_frequency{0};
    std::chrono::seconds duration{0};

    bool operator==(const TemporaryPush&) const = default;
};

struct SchedulePush {
    bool operator==(const SchedulePush&) const = default;
};

struct SetSamplingRate {
    std::chrono::seconds rate{0};

    bool operator==(const SetSamplingRate&) const = default;
};

struct SetCommFrequency {
    std::chrono::seconds frequency{0};

    bool operator==(const SetCommFrequency&) const = default;
};

struct SetSchedule {
    FetchSettings ftp;

    bool operator==(const SetSchedule&) const = default;
};

struct SetNetwork {
    NetworkSettings net;

    bool operator==(const SetNetwork&) const = default;
};

struct Stop {
    bool operator==(const Stop&) const = default;
};

struct GetProfile {
    bool operator==(const GetProfile&) const = default;
};

using Command = std::variant<Who, Pull, TemporaryPush, SchedulePush, SetSamplingRate,
                             SetCommFrequency, SetSchedule, SetNetwork, Stop, GetProfile>;

// Distinguishing tag of each command, as used in acknowledgements.
enum class CommandTag {
    who,
    pull,
    temporary_push,
    schedule_push,
    set_sampling_rate,
    set_comm_frequency,
    set_schedule,
    set_network,
    stop,
    get_profile,
};

std::string_view to_string(CommandTag tag);
std::optional<CommandTag> command_tag_from_string(std::string_view s);
CommandTag tag_of(const Command& cmd);

// True when all numeric payloads are strictly positive and nested settings
// are well-formed.
bool command_valid(const Command& cmd);

// Encoding is total on valid commands; the result is one newline-terminated
// line whose first segment is a three-letter tag.
std::string encode_command(const Command& cmd);

Decoded<Command> decode_command(std::string_view line);

}  // namespace caddot::protocol
