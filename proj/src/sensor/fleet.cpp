#include "caddot/sensor/fleet.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace caddot::sensor {

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        auto next = s.find(sep, pos);
        if (next == std::string_view::npos) {
            out.push_back(s.substr(pos));
            break;
        }
        out.push_back(s.substr(pos, next - pos));
        pos = next + 1;
    }
    return out;
}

std::optional<std::int64_t> parse_i64(std::string_view s) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

}  // namespace

std::variant<std::vector<SensorSpec>, FleetParseError> parse_fleet(std::string_view text) {
    std::vector<SensorSpec> fleet;
    int line_no = 0;
    for (auto raw : split(text, '\n')) {
        ++line_no;
        while (!raw.empty() && (raw.back() == '\r' || raw.back() == ' ')) raw.remove_suffix(1);
        if (raw.empty() || raw.front() == '#') continue;

        auto fields = split(raw, '\t');
        if (fields.size() != 8) {
            return FleetParseError{line_no, "expected 8 tab-separated fields"};
        }

        SensorSpec spec;
        spec.identity = {std::string(fields[0]), std::string(fields[1]),
                         std::string(fields[2])};
        if (!spec.identity.valid()) {
            return FleetParseError{line_no, "id, model, manufacturer must be non-empty"};
        }
        auto dialect = dialect_from_string(fields[3]);
        if (!dialect) return FleetParseError{line_no, "unknown dialect"};
        spec.dialect = *dialect;
        auto program = program_from_string(fields[4]);
        if (!program) return FleetParseError{line_no, "unknown program design"};
        spec.program = *program;
        auto boot = parse_i64(fields[5]);
        if (!boot || *boot < 0) return FleetParseError{line_no, "bad boot delay"};
        spec.boot_delay = std::chrono::milliseconds(*boot * 1000);
        spec.zone = std::string(fields[6]);
        if (spec.zone.empty()) return FleetParseError{line_no, "empty zone"};

        for (auto item : split(fields[7], ',')) {
            auto parts = split(item, ':');
            if (parts.size() != 3) {
                return FleetParseError{line_no, "phenomena must be name:unit:seed"};
            }
            auto seed = parse_i64(parts[2]);
            if (!seed) return FleetParseError{line_no, "bad phenomenon seed"};
            spec.phenomena.push_back({std::string(parts[0]), std::string(parts[1]),
                                      static_cast<std::uint64_t>(*seed)});
        }
        if (spec.phenomena.empty()) {
            return FleetParseError{line_no, "phenomena list must be non-empty"};
        }

        for (const auto& other : fleet) {
            if (other.identity.id == spec.identity.id) {
                return FleetParseError{line_no, "duplicate sensor id " + spec.identity.id};
            }
        }
        fleet.push_back(std::move(spec));
    }
    return fleet;
}

std::variant<std::vector<SensorSpec>, FleetParseError> load_fleet_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) return FleetParseError{0, "cannot open " + path};
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_fleet(ss.str());
}

std::string render_fleet(const std::vector<SensorSpec>& fleet) {
    std::ostringstream out;
    for (const auto& s : fleet) {
        out << s.identity.id << '\t' << s.identity.model << '\t' << s.identity.manufacturer
            << '\t' << to_string(s.dialect) << '\t' << to_string(s.program) << '\t'
            << s.boot_delay.count() / 1000 << '\t' << s.zone << '\t';
        for (std::size_t i = 0; i < s.phenomena.size(); ++i) {
            if (i) out << ',';
            out << s.phenomena[i].name << ':' << s.phenomena[i].unit << ':'
                << s.phenomena[i].seed;
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace caddot::sensor
