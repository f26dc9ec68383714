#include "caddot/harness/experiment.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace caddot::harness {

using nlohmann::json;

namespace {

std::string resolve(const std::string& base_dir, const std::string& path) {
    if (path.empty() || path.front() == '/') return path;
    if (base_dir.empty()) return path;
    return base_dir + "/" + path;
}

}  // namespace

std::variant<Experiment, ExperimentParseError> parse_experiment(const std::string& json_text,
                                                                const std::string& base_dir) {
    auto j = json::parse(json_text, nullptr, false);
    if (j.is_discarded()) return ExperimentParseError{"invalid JSON"};

    Experiment e;
    try {
        e.name = j.at("name").get<std::string>();
        e.fleet_file = resolve(base_dir, j.at("fleet").get<std::string>());
        e.store_file = resolve(base_dir, j.at("store").get<std::string>());
        e.schedules_dir = resolve(base_dir, j.value("schedules_dir", std::string("schedules")));
        e.plugins_dir = resolve(base_dir, j.value("plugins_dir", std::string("plugins")));

        for (const auto& t : j.at("transports")) {
            auto kind = transport::transport_kind_from_string(t.get<std::string>());
            if (!kind) return ExperimentParseError{"unknown transport " + t.get<std::string>()};
            e.transports.push_back(*kind);
        }
        if (e.transports.empty()) {
            return ExperimentParseError{"at least one transport required"};
        }

        auto mode = j.value("mode", std::string("static"));
        if (mode == "mobile") {
            e.mobile_mode = true;
            if (j.contains("mobile")) {
                for (const auto& z : j["mobile"].value("zones", json::array())) {
                    e.mobile.zones.push_back(z.get<std::string>());
                }
                e.mobile.dwell = std::chrono::seconds(j["mobile"].value("dwell_s", 5));
            }
            if (e.mobile.zones.empty()) {
                return ExperimentParseError{"mobile mode needs zones"};
            }
        } else if (mode != "static") {
            return ExperimentParseError{"mode must be static or mobile"};
        }

        e.emulate_latency = j.value("emulate_latency", false);
        e.deterministic = j.value("deterministic", !e.emulate_latency);
        e.seed = j.value("seed", 7ULL);
        e.parallelism = j.value("parallelism", 8);
        if (e.parallelism < 1) return ExperimentParseError{"parallelism must be >= 1"};
        e.settle = std::chrono::seconds(j.value("settle_s", 180));
        e.audit_window = std::chrono::seconds(j.value("audit_window_s", 60));

        if (j.contains("epoch")) {
            auto day = protocol::weekday_from_string(
                j["epoch"].value("weekday", std::string("MON")));
            if (!day) return ExperimentParseError{"bad epoch weekday"};
            e.epoch.epoch_weekday = *day;
            auto time = j["epoch"].value("time", std::string("00:00"));
            if (time.size() != 5 || time[2] != ':') {
                return ExperimentParseError{"bad epoch time"};
            }
            e.epoch.epoch_time = {std::stoi(time.substr(0, 2)) * 60 +
                                  std::stoi(time.substr(3))};
        }

        if (j.contains("churn")) {
            ChurnSpec c;
            c.arrival_interval = std::chrono::seconds(j["churn"].value("arrival_interval_s", 0));
            c.departure_rate = j["churn"].value("departure_rate", 0.0);
            c.duration = std::chrono::seconds(j["churn"].value("duration_s", 60));
            if (c.departure_rate < 0.0 || c.arrival_interval.count() < 0) {
                return ExperimentParseError{"churn rates must be >= 0"};
            }
            e.churn = c;
        }

        for (const auto& step : j.value("context_timeline", json::array())) {
            ContextStep cs;
            cs.at = std::chrono::seconds(step.value("at_s", 0));
            if (step.contains("season")) {
                auto s = registry::season_from_string(step["season"].get<std::string>());
                if (!s) return ExperimentParseError{"bad season in timeline"};
                cs.season = *s;
            }
            if (step.contains("tod")) {
                auto p = registry::day_phase_from_string(step["tod"].get<std::string>());
                if (!p) return ExperimentParseError{"bad tod in timeline"};
                cs.time_of_day = *p;
            }
            const json peers = step.value("peer", json::object());
            for (const auto& [peer_id, status_name] : peers.items()) {
                auto status = registry::peer_status_from_string(
                    status_name.get<std::string>());
                if (!status) return ExperimentParseError{"bad peer status in timeline"};
                cs.peers.emplace_back(peer_id, *status);
            }
            for (const auto& id : step.value("reconfigure", json::array())) {
                cs.reconfigure.push_back(id.get<std::string>());
            }
            e.context_timeline.push_back(std::move(cs));
        }
    } catch (const json::exception& ex) {
        return ExperimentParseError{ex.what()};
    }
    return e;
}

std::variant<Experiment, ExperimentParseError> load_experiment(const std::string& path) {
    std::ifstream in(path);
    if (!in) return ExperimentParseError{"cannot open " + path};
    std::ostringstream ss;
    ss << in.rdbuf();
    auto base = std::filesystem::path(path).parent_path().string();
    return parse_experiment(ss.str(), base);
}

}  // namespace caddot::harness
