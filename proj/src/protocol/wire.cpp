#include "caddot/protocol/wire.hpp"

#include <cctype>

namespace caddot::protocol {

std::string_view to_string(WireErrc code) {
    switch (code) {
        case WireErrc::malformed_line: return "MalformedLine";
        case WireErrc::unknown_tag: return "UnknownTag";
        case WireErrc::bad_arity: return "BadArity";
        case WireErrc::bad_value: return "BadValue";
    }
    return "?";
}

namespace {

int hex_digit(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

}  // namespace

std::string escape_segment(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (char c : raw) {
        switch (c) {
            case '%': out += "%25"; break;
            case '[': out += "%5B"; break;
            case ']': out += "%5D"; break;
            case '\n': out += "%0A"; break;
            case '\r': out += "%0D"; break;
            default: out += c;
        }
    }
    return out;
}

Decoded<std::string> unescape_segment(std::string_view seg) {
    std::string out;
    out.reserve(seg.size());
    for (std::size_t i = 0; i < seg.size(); ++i) {
        char c = seg[i];
        if (c != '%') {
            out += c;
            continue;
        }
        if (i + 2 >= seg.size()) {
            return WireError{WireErrc::malformed_line, "truncated escape"};
        }
        int hi = hex_digit(seg[i + 1]);
        int lo = hex_digit(seg[i + 2]);
        if (hi < 0 || lo < 0) {
            return WireError{WireErrc::malformed_line, "bad escape"};
        }
        out += static_cast<char>(hi * 16 + lo);
        i += 2;
    }
    return out;
}

std::string join_segments(const std::vector<std::string>& raw_segments) {
    std::string line;
    for (const auto& seg : raw_segments) {
        line += '[';
        line += escape_segment(seg);
        line += ']';
    }
    line += '\n';
    return line;
}

Decoded<std::vector<std::string>> split_segments(std::string_view line) {
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) {
        line.remove_suffix(1);
    }
    if (line.empty()) {
        return WireError{WireErrc::malformed_line, "empty line"};
    }
    std::vector<std::string> segments;
    std::size_t i = 0;
    while (i < line.size()) {
        if (line[i] != '[') {
            return WireError{WireErrc::malformed_line, "expected '['"};
        }
        auto close = line.find(']', i + 1);
        if (close == std::string_view::npos) {
            return WireError{WireErrc::malformed_line, "unterminated segment"};
        }
        auto body = line.substr(i + 1, close - i - 1);
        if (body.find('[') != std::string_view::npos) {
            return WireError{WireErrc::malformed_line, "nested '['"};
        }
        auto unescaped = unescape_segment(body);
        if (auto* err = std::get_if<WireError>(&unescaped)) return *err;
        segments.push_back(std::move(std::get<std::string>(unescaped)));
        i = close + 1;
    }
    return segments;
}

bool is_three_letter_tag(std::string_view tag) {
    if (tag.size() != 3) return false;
    for (char c : tag) {
        if (!std::isalpha(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

}  // namespace caddot::protocol
