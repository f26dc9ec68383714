#include "caddot/transport/endpoint.hpp"

#include <charconv>

namespace caddot::transport {

std::string_view to_string(TransportKind kind) {
    switch (kind) {
        case TransportKind::tcp: return "tcp";
        case TransportKind::udp: return "udp";
        case TransportKind::channel: return "channel";
    }
    return "?";
}

std::optional<TransportKind> transport_kind_from_string(std::string_view s) {
    if (s == "tcp") return TransportKind::tcp;
    if (s == "udp") return TransportKind::udp;
    if (s == "channel") return TransportKind::channel;
    return std::nullopt;
}

std::optional<std::pair<std::string, int>> split_host_port(const std::string& address) {
    auto colon = address.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 >= address.size()) {
        return std::nullopt;
    }
    int port = 0;
    auto* begin = address.data() + colon + 1;
    auto* end = address.data() + address.size();
    auto [ptr, ec] = std::from_chars(begin, end, port);
    if (ec != std::errc{} || ptr != end || port < 1 || port > 65535) return std::nullopt;
    return std::make_pair(address.substr(0, colon), port);
}

}  // namespace caddot::transport
