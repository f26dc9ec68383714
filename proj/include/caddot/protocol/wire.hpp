#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace caddot::protocol {

// ── Wire grammar ─────────────────────────────────────────────────────────────
//
// One line = one or more segments, each enclosed in '[' ']', concatenated with
// no separator, terminated by '\n'. Segment content is escaped so arbitrary
// payloads (including brackets and newlines) can travel:
//
//   '%' -> %25   '[' -> %5B   ']' -> %5D   '\n' -> %0A   '\r' -> %0D
//
// The first segment of a line is its tag; command and message tags are always
// exactly three letters.

enum class WireErrc {
    malformed_line,
    unknown_tag,
    bad_arity,
    bad_value,
};

struct WireError {
    WireErrc code;
    std::string detail;

    bool operator==(const WireError&) const = default;
};

std::string_view to_string(WireErrc code);

template <class T>
using Decoded = std::variant<T, WireError>;

template <class T>
bool is_error(const Decoded<T>& d) {
    return std::holds_alternative<WireError>(d);
}

std::string escape_segment(std::string_view raw);

// Inverse of escape_segment; malformed escapes yield an error.
Decoded<std::string> unescape_segment(std::string_view seg);

// Joins pre-escaped segments into a full line (with trailing newline).
std::string join_segments(const std::vector<std::string>& raw_segments);

// Splits a line into unescaped segments. A missing trailing newline is
// tolerated; embedded garbage between or around segments is not.
Decoded<std::vector<std::string>> split_segments(std::string_view line);

// True when the tag is exactly three ASCII letters.
bool is_three_letter_tag(std::string_view tag);

}  // namespace caddot::protocol
