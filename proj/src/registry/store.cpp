#include "caddot/registry/store.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace caddot::registry {

std::string_view to_string(Season s) {
    switch (s) {
        case Season::summer: return "summer";
        case Season::winter: return "winter";
        case Season::spring: return "spring";
        case Season::autumn: return "autumn";
    }
    return "?";
}

std::string_view to_string(DayPhase p) {
    return p == DayPhase::day ? "day" : "night";
}

std::string_view to_string(PeerStatus p) {
    switch (p) {
        case PeerStatus::alive: return "alive";
        case PeerStatus::faulty: return "faulty";
        case PeerStatus::absent: return "absent";
    }
    return "?";
}

std::optional<Season> season_from_string(std::string_view s) {
    for (auto v : {Season::summer, Season::winter, Season::spring, Season::autumn}) {
        if (to_string(v) == s) return v;
    }
    return std::nullopt;
}

std::optional<DayPhase> day_phase_from_string(std::string_view s) {
    if (s == "day") return DayPhase::day;
    if (s == "night") return DayPhase::night;
    return std::nullopt;
}

std::optional<PeerStatus> peer_status_from_string(std::string_view s) {
    for (auto v : {PeerStatus::alive, PeerStatus::faulty, PeerStatus::absent}) {
        if (to_string(v) == s) return v;
    }
    return std::nullopt;
}

std::string_view to_string(RegistrationStatus s) {
    return s == RegistrationStatus::known ? "KNOWN" : "REGISTERED";
}

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

std::variant<Store, StoreParseError> Store::parse(std::string_view text,
                                                  const std::string& schedules_dir) {
    Store store;
    int line_no = 0;
    for (auto raw : split(text, '\n')) {
        ++line_no;
        while (!raw.empty() && (raw.back() == '\r' || raw.back() == ' ')) raw.remove_suffix(1);
        if (raw.empty() || raw.front() == '#') continue;
        auto fields = split(raw, '\t');
        if (fields.size() != 9) {
            return StoreParseError{line_no, "expected 9 tab-separated fields"};
        }
        SensorRecord r;
        r.identity = {std::string(fields[0]), std::string(fields[1]), std::string(fields[2])};
        if (!r.identity.valid()) return StoreParseError{line_no, "incomplete identity"};
        r.plugin_id = std::string(fields[3]);
        for (auto m : split(fields[4], ',')) {
            if (!m.empty()) r.measures.emplace_back(m);
        }
        auto rate = parse_i64(fields[5]);
        auto freq = parse_i64(fields[6]);
        if (!rate || !freq || *rate <= 0 || *freq <= 0) {
            return StoreParseError{line_no, "base rates must be positive"};
        }
        r.base_rate = std::chrono::seconds(*rate);
        r.base_freq = std::chrono::seconds(*freq);
        if (fields[7] != "-") {
            std::ifstream in(schedules_dir + "/" + std::string(fields[7]));
            if (!in) {
                return StoreParseError{line_no,
                                       "schedule file not found: " + std::string(fields[7])};
            }
            std::ostringstream ss;
            ss << in.rdbuf();
            auto parsed = protocol::parse_schedule(ss.str());
            if (auto* err = std::get_if<protocol::ScheduleError>(&parsed)) {
                return StoreParseError{line_no, "bad schedule: " + err->detail};
            }
            r.base_schedule = std::move(std::get<protocol::Schedule>(parsed));
        }
        if (fields[8] != "-") r.peer_temperature = std::string(fields[8]);

        if (store.find(r.identity.id)) {
            return StoreParseError{line_no, "duplicate id " + r.identity.id};
        }
        store.add(std::move(r));
    }
    return store;
}

std::variant<Store, StoreParseError> Store::load_file(const std::string& path,
                                                      const std::string& schedules_dir) {
    std::ifstream in(path);
    if (!in) return StoreParseError{0, "cannot open " + path};
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), schedules_dir);
}

void Store::add(SensorRecord record) {
    records_[record.identity.id] = std::move(record);
}

SensorRecord* Store::find(const std::string& id) {
    auto it = records_.find(id);
    return it == records_.end() ? nullptr : &it->second;
}

const SensorRecord* Store::find(const std::string& id) const {
    auto it = records_.find(id);
    return it == records_.end() ? nullptr : &it->second;
}

std::vector<const SensorRecord*> Store::all() const {
    std::vector<const SensorRecord*> out;
    for (const auto& [id, r] : records_) out.push_back(&r);
    return out;
}

}  // namespace caddot::registry
