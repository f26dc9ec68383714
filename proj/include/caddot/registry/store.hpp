#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "caddot/protocol/types.hpp"

namespace caddot::registry {

enum class Season { summer, winter, spring, autumn };
enum class DayPhase { day, night };
enum class PeerStatus { alive, faulty, absent };

std::string_view to_string(Season s);
std::string_view to_string(DayPhase p);
std::string_view to_string(PeerStatus p);
std::optional<Season> season_from_string(std::string_view s);
std::optional<DayPhase> day_phase_from_string(std::string_view s);
std::optional<PeerStatus> peer_status_from_string(std::string_view s);

// Environment facts the reason phase consumes.
struct Context {
    Season season = Season::summer;
    DayPhase time_of_day = DayPhase::day;
    std::map<std::string, PeerStatus> peer_status;  // default alive

    PeerStatus peer(const std::string& id) const {
        auto it = peer_status.find(id);
        return it == peer_status.end() ? PeerStatus::alive : it->second;
    }
};

enum class RegistrationStatus { known, registered };

std::string_view to_string(RegistrationStatus s);

// Everything the cloud knows about one sensor.
struct SensorRecord {
    protocol::SensorIdentity identity;
    std::string plugin_id;
    std::vector<std::string> measures;
    std::chrono::seconds base_rate{60};
    std::chrono::seconds base_freq{60};
    std::optional<protocol::Schedule> base_schedule;
    std::string peer_temperature;  // id of the paired temperature sensor, if any

    RegistrationStatus status = RegistrationStatus::known;
    std::optional<protocol::SensorProfile> profile;
    std::optional<protocol::SensingStrategy> strategy;
    std::string credential_token;

    bool measures_phenomenon(std::string_view name) const {
        for (const auto& m : measures) {
            if (m == name) return true;
        }
        return false;
    }
};

struct StoreParseError {
    int line = 0;
    std::string detail;
};

// ── Store ────────────────────────────────────────────────────────────────────
//
// Seed records, loaded from a tab-separated fixture:
//
//   id  model  manufacturer  plugin_id  measures  base_rate  base_freq  schedule  peer
//
// measures: comma list. schedule: file name under the schedules directory,
// or '-'. peer: paired temperature sensor id, or '-'.

class Store {
public:
    static std::variant<Store, StoreParseError> parse(std::string_view text,
                                                      const std::string& schedules_dir);
    static std::variant<Store, StoreParseError> load_file(const std::string& path,
                                                          const std::string& schedules_dir);

    void add(SensorRecord record);
    SensorRecord* find(const std::string& id);
    const SensorRecord* find(const std::string& id) const;
    std::size_t size() const { return records_.size(); }
    std::vector<const SensorRecord*> all() const;

private:
    std::map<std::string, SensorRecord> records_;
};

}  // namespace caddot::registry
