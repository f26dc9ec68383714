#pragma once

#include <string>
#include <variant>
#include <vector>

#include "caddot/protocol/types.hpp"
#include "caddot/transport/endpoint.hpp"

namespace caddot::sensor {

enum class DialectId { A, B, C };

std::string_view to_string(DialectId d);
std::optional<DialectId> dialect_from_string(std::string_view s);

enum class ProgramDesign { cpd, spd };

std::string_view to_string(ProgramDesign p);
std::optional<ProgramDesign> program_from_string(std::string_view s);

struct PhenomenonSpec {
    std::string name;
    std::string unit;
    std::uint64_t seed = 0;

    bool operator==(const PhenomenonSpec&) const = default;
};

// One virtual sensor: who it is, what it measures, which dialect it speaks,
// and how it behaves at boot.
struct SensorSpec {
    protocol::SensorIdentity identity;
    std::vector<PhenomenonSpec> phenomena;
    DialectId dialect = DialectId::A;
    ProgramDesign program = ProgramDesign::cpd;
    std::chrono::milliseconds boot_delay{0};
    std::string zone = "default";

    bool operator==(const SensorSpec&) const = default;
};

struct FleetParseError {
    int line = 0;
    std::string detail;
};

// ── Fleet file ───────────────────────────────────────────────────────────────
//
// Tab-separated, one sensor per line, '#' comments:
//
//   id  model  manufacturer  dialect  program  boot_delay_s  zone  phenomena
//
// phenomena: comma list of name:unit:seed.

std::variant<std::vector<SensorSpec>, FleetParseError> parse_fleet(std::string_view text);
std::variant<std::vector<SensorSpec>, FleetParseError> load_fleet_file(const std::string& path);
std::string render_fleet(const std::vector<SensorSpec>& fleet);

}  // namespace caddot::sensor
