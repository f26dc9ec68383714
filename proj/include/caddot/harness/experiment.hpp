#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "caddot/protocol/schedule.hpp"
#include "caddot/registry/store.hpp"
#include "caddot/transport/endpoint.hpp"

namespace caddot::harness {

struct ContextStep {
    std::chrono::seconds at{0};
    std::optional<registry::Season> season;
    std::optional<registry::DayPhase> time_of_day;
    std::vector<std::pair<std::string, registry::PeerStatus>> peers;
    std::vector<std::string> reconfigure;
};

struct ChurnSpec {
    std::chrono::seconds arrival_interval{0};  // 0 = spawn everything at once
    double departure_rate = 0.0;               // fraction of sensors departing mid-run
    std::chrono::seconds duration{60};
};

struct MobileSpec {
    std::vector<std::string> zones;
    std::chrono::seconds dwell{5};
};

// One experiment: which fleet, which transports, and how the world behaves
// while it runs.
struct Experiment {
    std::string name;
    std::string fleet_file;
    std::string store_file;
    std::string schedules_dir;
    std::string plugins_dir;
    std::vector<transport::TransportKind> transports;
    bool mobile_mode = false;
    MobileSpec mobile;
    bool emulate_latency = false;
    bool deterministic = true;
    std::uint64_t seed = 7;
    int parallelism = 8;
    protocol::SimCalendar epoch;
    std::chrono::seconds settle{180};
    std::chrono::seconds audit_window{60};
    std::optional<ChurnSpec> churn;
    std::vector<ContextStep> context_timeline;
};

struct ExperimentParseError {
    std::string detail;
};

// Loads an experiment definition (JSON); relative paths are resolved against
// the file's directory.
std::variant<Experiment, ExperimentParseError> load_experiment(const std::string& path);
std::variant<Experiment, ExperimentParseError> parse_experiment(const std::string& json_text,
                                                                const std::string& base_dir);

}  // namespace caddot::harness
