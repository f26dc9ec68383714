#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "caddot/protocol/command.hpp"
#include "caddot/protocol/message.hpp"
#include "caddot/sensor/fleet.hpp"

namespace caddot::sensor {

// ── Dialects ─────────────────────────────────────────────────────────────────
//
// A dialect is a sensor-specific command vocabulary and exchange sequence.
// [WHO] and its M1 reply are dialect-independent; everything else differs:
//
//   A  the canonical grammar as-is
//   B  [HLO] -> [ACK][HLO] handshake before every command; tag synonyms
//      [SRT] for [SMP] and [CFQ] for [DCF] (the canonical tags are rejected)
//   C  segments after the tag reversed, every command/reply terminated by an
//      [EOC] segment, and one command per connection: after answering, the
//      sensor drops the session and re-seeks the beacon
//
// A DialectCodec is the sensor-side translator; adapters implement the
// mirror image.

class DialectCodec {
public:
    virtual ~DialectCodec() = default;

    struct Inbound {
        std::optional<protocol::Command> command;  // translated canonical command
        std::vector<std::string> replies;          // immediate dialect replies (handshakes)
        std::optional<protocol::Err> error;        // dialect violation
    };

    virtual Inbound inbound(std::string_view line) = 0;

    // Translates a canonical reply message into the dialect. M1 replies are
    // exempt from translation everywhere (who_reply).
    virtual std::string outbound(const protocol::Message& msg, bool who_reply) = 0;

    // Dialect C: the session is spent once a command has been answered.
    virtual bool close_after_command_reply() const { return false; }

    virtual void on_new_connection() {}

    virtual DialectId id() const = 0;
};

std::unique_ptr<DialectCodec> make_dialect_codec(DialectId id);

// Line-level transforms shared between the dialect-C codec and its adapter.
std::string reverse_after_tag_add_eoc(std::string_view canonical_line);
std::optional<std::string> strip_eoc_unreverse(std::string_view dialect_line);

// Tag synonym maps for dialect B (canonical <-> dialect).
std::string b_translate_out(std::string_view canonical_line);  // adapter -> sensor
std::optional<std::string> b_translate_in(std::string_view dialect_line);

inline constexpr std::string_view kHelloLine = "[HLO]\n";
inline constexpr std::string_view kHelloAck = "[ACK][HLO]\n";

}  // namespace caddot::sensor
