#include "caddot/registry/client.hpp"

#include "caddot/protocol/wire.hpp"

namespace caddot::registry {

using namespace caddot::protocol;
using namespace caddot::transport;

namespace {

std::map<std::string, std::string> kv_of(const std::vector<std::string>& segs,
                                         std::size_t from) {
    std::map<std::string, std::string> out;
    for (std::size_t i = from; i < segs.size(); ++i) {
        auto eq = segs[i].find('=');
        if (eq == std::string::npos) continue;
        out.emplace(segs[i].substr(0, eq), segs[i].substr(eq + 1));
    }
    return out;
}

std::string get_or(const std::map<std::string, std::string>& kv, const std::string& key,
                   const std::string& fallback = {}) {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
}

[[noreturn]] void raise(const std::vector<std::string>& segs) {
    if (segs.size() == 3 && segs[0] == "ERR") {
        auto code = err_code_from_string(segs[1]);
        throw RegistryError(code.value_or(ErrCode::bad_value), segs[2]);
    }
    throw RegistryError(ErrCode::bad_value, "unexpected registry reply");
}

std::vector<std::string> split_list(const std::string& s, char sep) {
    std::vector<std::string> out;
    if (s.empty()) return out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        auto next = s.find(sep, pos);
        if (next == std::string::npos) {
            out.push_back(s.substr(pos));
            break;
        }
        out.push_back(s.substr(pos, next - pos));
        pos = next + 1;
    }
    return out;
}

}  // namespace

Client::Client(Transport& net, Endpoint api, std::chrono::milliseconds timeout)
    : net_(net), api_(std::move(api)), timeout_(timeout) {}

std::vector<std::string> Client::request(const std::string& line,
                                         std::chrono::milliseconds timeout) {
    std::string reply;
    try {
        auto session = net_.connect(api_);
        session->send(line);
        reply = session->recv(timeout);
        session->close();
    } catch (const TransportError& e) {
        throw RegistryError(ErrCode::unreachable, e.what());
    }
    auto split = split_segments(reply);
    if (std::holds_alternative<WireError>(split)) {
        throw RegistryError(ErrCode::malformed_line, "garbled registry reply");
    }
    return std::get<std::vector<std::string>>(split);
}

RecordView Client::identify(const SensorIdentity& identity) {
    auto segs = request(join_segments({"RID", "id=" + identity.id, "model=" + identity.model,
                                       "mfr=" + identity.manufacturer}),
                        timeout_);
    if (segs[0] != "REC") raise(segs);
    auto kv = kv_of(segs, 1);
    RecordView view;
    view.id = get_or(kv, "id");
    view.plugin_id = get_or(kv, "plugin");
    view.status = get_or(kv, "status") == "REGISTERED" ? RegistrationStatus::registered
                                                       : RegistrationStatus::known;
    view.base_rate = std::chrono::seconds(std::stoll(get_or(kv, "rate", "0")));
    view.base_freq = std::chrono::seconds(std::stoll(get_or(kv, "freq", "0")));
    view.measures = split_list(get_or(kv, "measures"), ';');
    view.peer_temperature = get_or(kv, "peer");
    return view;
}

plugin::AdapterDescriptor Client::find_plugin(const std::string& id) {
    auto segs = request(join_segments({"FPL", "id=" + id}), timeout_);
    if (segs[0] != "PLG") raise(segs);
    auto kv = kv_of(segs, 1);
    plugin::AdapterDescriptor d;
    d.plugin_id = get_or(kv, "plugin_id");
    d.dialect = get_or(kv, "dialect");
    d.version = static_cast<int>(std::stoll(get_or(kv, "version", "1")));
    d.artifact = get_or(kv, "artifact");
    return d;
}

Registration Client::register_sensor(const std::string& id, const SensorProfile& profile,
                                     const SensingStrategy& strategy) {
    auto segs = request(
        join_segments({"REG", "id=" + id,
                       "profile=" + encode_message(Message{ProfileMsg{profile}}),
                       "strategy=" + encode_strategy(strategy)}),
        timeout_);
    if (segs[0] != "RGD") raise(segs);
    auto kv = kv_of(segs, 1);
    return Registration{get_or(kv, "regid"), get_or(kv, "token")};
}

SensingStrategy Client::plan(const std::string& id) {
    auto segs = request(join_segments({"PLN", "id=" + id}), timeout_);
    if (segs[0] != "STR") raise(segs);
    // Re-join and decode through the strategy codec.
    auto decoded = decode_strategy(join_segments(segs));
    if (auto* err = std::get_if<WireError>(&decoded)) {
        throw RegistryError(ErrCode::bad_value, err->detail);
    }
    return std::get<SensingStrategy>(decoded);
}

void Client::set_context(const Context& context) {
    std::vector<std::string> segs{"CTX", "season=" + std::string(to_string(context.season)),
                                  "tod=" + std::string(to_string(context.time_of_day))};
    for (const auto& [id, status] : context.peer_status) {
        segs.push_back("peer." + id + "=" + std::string(to_string(status)));
    }
    auto reply = request(join_segments(segs), timeout_);
    if (reply[0] != "ACK") raise(reply);
}

void Client::publish_schedule(const std::string& path, const std::string& user,
                              const std::string& pass, const std::string& text) {
    auto reply = request(join_segments({"PUB", "path=" + path, "user=" + user,
                                        "pass=" + pass, "text=" + text}),
                         timeout_);
    if (reply[0] != "ACK") raise(reply);
}

std::string Client::fetch_schedule(const std::string& path, const std::string& user,
                                   const std::string& pass) {
    auto reply = request(
        join_segments({"FCH", "path=" + path, "user=" + user, "pass=" + pass}), timeout_);
    if (reply[0] != "FIL" || reply.size() != 2) raise(reply);
    return reply[1];
}

DirectStatus Client::wait_direct(const std::string& id, std::chrono::milliseconds timeout,
                                 long min_gen) {
    auto reply = request(join_segments({"DCW", "id=" + id,
                                        "timeout_ms=" + std::to_string(timeout.count()),
                                        "min_gen=" + std::to_string(min_gen)}),
                         timeout + timeout_);
    if (reply[0] != "DCS") raise(reply);
    auto kv = kv_of(reply, 1);
    DirectStatus status;
    status.connected = get_or(kv, "connected") == "1";
    status.at = TimePoint{std::stoll(get_or(kv, "at", "-1"))};
    status.gen = std::stol(get_or(kv, "gen", "0"));
    return status;
}

ReadingCounts Client::reading_counts(const std::string& id, TimePoint since) {
    auto reply = request(join_segments({"RDC", "id=" + id,
                                        "since_ms=" + std::to_string(since.ms)}),
                         timeout_);
    if (reply[0] != "RDN") raise(reply);
    auto kv = kv_of(reply, 1);
    return ReadingCounts{std::stol(get_or(kv, "readings", "0")),
                         std::stol(get_or(kv, "batches", "0"))};
}

std::string Client::relay(const std::string& id, const std::string& line,
                          std::chrono::milliseconds timeout) {
    auto reply = request(join_segments({"RLY", "id=" + id, "line=" + line,
                                        "timeout_ms=" + std::to_string(timeout.count())}),
                         timeout + timeout_);
    if (reply[0] != "RLR") raise(reply);
    auto kv = kv_of(reply, 1);
    return get_or(kv, "line");
}

}  // namespace caddot::registry
