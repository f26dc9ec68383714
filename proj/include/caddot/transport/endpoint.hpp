#pragma once

#include <optional>
#include <string>

namespace caddot::transport {

enum class TransportKind { tcp, udp, channel };

std::string_view to_string(TransportKind kind);
std::optional<TransportKind> transport_kind_from_string(std::string_view s);

// Where a session can be opened: "host:port" for tcp/udp, a zone name for
// the in-process channel transport.
struct Endpoint {
    TransportKind kind = TransportKind::tcp;
    std::string address;

    bool operator==(const Endpoint&) const = default;
};

// Splits "host:port"; returns nullopt when the port is missing or invalid.
std::optional<std::pair<std::string, int>> split_host_port(const std::string& address);

}  // namespace caddot::transport
