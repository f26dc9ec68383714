#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "caddot/protocol/schedule.hpp"

namespace caddot::protocol {

// Minimal identification every sensor must be able to report: unique id,
// model, manufacturer.
struct SensorIdentity {
    std::string id;
    std::string model;
    std::string manufacturer;

    bool operator==(const SensorIdentity&) const = default;

    bool valid() const { return !id.empty() && !model.empty() && !manufacturer.empty(); }
};

// Everything needed to fetch a schedule file: server endpoint, path, and
// credentials. The reserved server value "inline" means the path field itself
// carries the (escaped) schedule text instead of a location.
struct FetchSettings {
    std::string server;
    std::string path;
    std::string username;
    std::string password;

    bool operator==(const FetchSettings&) const = default;

    bool valid() const {
        return !server.empty() && !path.empty() && !username.empty() && !password.empty();
    }
};

inline constexpr std::string_view kInlineFetchServer = "inline";

// Secure-network parameters handed to a sensor so it can deliver data
// directly to the sink.
struct NetworkSettings {
    std::string access_point;
    std::string auth_key;
    std::string sink_address;
    int sink_port = 0;
    std::string credential_token;

    bool operator==(const NetworkSettings&) const = default;

    bool valid() const {
        return sink_port >= 1 && sink_port <= 65535 && !credential_token.empty();
    }
};

enum class Acquisition {
    pull,
    push_interval,
    push_schedule,
    stop,
};

std::string_view to_string(Acquisition a);
std::optional<Acquisition> acquisition_from_string(std::string_view s);

// The product of the reason phase: how a sensor should sense and report.
struct SensingStrategy {
    std::chrono::seconds sampling_rate{60};
    std::chrono::seconds comm_frequency{60};
    Acquisition acquisition = Acquisition::pull;
    std::optional<Schedule> schedule;

    bool operator==(const SensingStrategy&) const = default;
};

struct Phenomenon {
    std::string name;
    std::string unit;

    bool operator==(const Phenomenon&) const = default;
};

// Complete capability record a sensor reports in response to a profile
// request.
struct SensorProfile {
    SensorIdentity identity;
    std::vector<Phenomenon> phenomena;
    std::vector<Acquisition> supported_modes;
    SensingStrategy strategy;

    bool operator==(const SensorProfile&) const = default;
};

}  // namespace caddot::protocol
