#include "caddot/protocol/message.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>

namespace caddot::protocol {

namespace {

struct KvPairs {
    std::vector<std::pair<std::string, std::string>> pairs;

    const std::string* find(std::string_view key) const {
        for (const auto& [k, v] : pairs) {
            if (k == key) return &v;
        }
        return nullptr;
    }
};

Decoded<KvPairs> parse_kv(const std::vector<std::string>& segs, std::size_t from) {
    KvPairs out;
    for (std::size_t i = from; i < segs.size(); ++i) {
        auto eq = segs[i].find('=');
        if (eq == std::string::npos || eq == 0) {
            return WireError{WireErrc::bad_value, "expected key=value segment: " + segs[i]};
        }
        out.pairs.emplace_back(segs[i].substr(0, eq), segs[i].substr(eq + 1));
    }
    return out;
}

std::optional<std::int64_t> parse_i64(std::string_view s) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::vector<std::string> split_list(std::string_view s, char sep) {
    std::vector<std::string> out;
    if (s.empty()) return out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        auto next = s.find(sep, pos);
        if (next == std::string_view::npos) {
            out.emplace_back(s.substr(pos));
            break;
        }
        out.emplace_back(s.substr(pos, next - pos));
        pos = next + 1;
    }
    return out;
}

std::string join_phenomena(const std::vector<Phenomenon>& ps) {
    std::string out;
    for (const auto& p : ps) {
        if (!out.empty()) out += ';';
        out += p.name;
        out += ':';
        out += p.unit;
    }
    return out;
}

std::string join_modes(const std::vector<Acquisition>& modes) {
    std::string out;
    for (auto m : modes) {
        if (!out.empty()) out += ';';
        out += to_string(m);
    }
    return out;
}

constexpr std::string_view kIdentityKeys[] = {"id", "model", "mfr"};

bool is_identity_key(std::string_view k) {
    return k == kIdentityKeys[0] || k == kIdentityKeys[1] || k == kIdentityKeys[2];
}

}  // namespace

std::string_view to_string(ErrCode code) {
    switch (code) {
        case ErrCode::malformed_line: return "MalformedLine";
        case ErrCode::unknown_tag: return "UnknownTag";
        case ErrCode::bad_arity: return "BadArity";
        case ErrCode::bad_value: return "BadValue";
        case ErrCode::dialect_mismatch: return "DialectMismatch";
        case ErrCode::fetch_unreachable: return "FetchUnreachable";
        case ErrCode::auth_failed: return "AuthFailed";
        case ErrCode::syntax_error: return "SyntaxError";
        case ErrCode::sink_refused: return "SinkRefused";
        case ErrCode::bad_token: return "BadToken";
        case ErrCode::not_found: return "NotFound";
        case ErrCode::unknown_sensor: return "UnknownSensor";
        case ErrCode::no_adapter: return "NoAdapter";
        case ErrCode::plugin_unavailable: return "PluginUnavailable";
        case ErrCode::unreachable: return "Unreachable";
        case ErrCode::busy: return "Busy";
    }
    return "?";
}

std::optional<ErrCode> err_code_from_string(std::string_view s) {
    static constexpr ErrCode all[] = {
        ErrCode::malformed_line, ErrCode::unknown_tag,    ErrCode::bad_arity,
        ErrCode::bad_value,      ErrCode::dialect_mismatch, ErrCode::fetch_unreachable,
        ErrCode::auth_failed,    ErrCode::syntax_error,   ErrCode::sink_refused,
        ErrCode::bad_token,      ErrCode::not_found,      ErrCode::unknown_sensor,
        ErrCode::no_adapter,     ErrCode::plugin_unavailable, ErrCode::unreachable,
        ErrCode::busy,
    };
    for (auto c : all) {
        if (to_string(c) == s) return c;
    }
    return std::nullopt;
}

std::string_view to_string(Acquisition a) {
    switch (a) {
        case Acquisition::pull: return "pull";
        case Acquisition::push_interval: return "push_interval";
        case Acquisition::push_schedule: return "push_schedule";
        case Acquisition::stop: return "stop";
    }
    return "?";
}

std::optional<Acquisition> acquisition_from_string(std::string_view s) {
    static constexpr Acquisition all[] = {Acquisition::pull, Acquisition::push_interval,
                                          Acquisition::push_schedule, Acquisition::stop};
    for (auto a : all) {
        if (to_string(a) == s) return a;
    }
    return std::nullopt;
}

std::string format_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

bool message_valid(const Message& msg) {
    return std::visit(
        [](const auto& m) -> bool {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Identity>) {
                if (!m.who.valid()) return false;
                for (const auto& [k, v] : m.extras) {
                    if (k.empty() || is_identity_key(k) || k.find('=') != std::string::npos) {
                        return false;
                    }
                }
                return true;
            } else if constexpr (std::is_same_v<T, ProfileMsg>) {
                const auto& p = m.profile;
                if (!p.identity.valid() || p.phenomena.empty()) return false;
                for (const auto& ph : p.phenomena) {
                    if (ph.name.empty() ||
                        ph.name.find_first_of(":;") != std::string::npos ||
                        ph.unit.find_first_of(":;") != std::string::npos) {
                        return false;
                    }
                }
                bool want_sched = p.strategy.acquisition == Acquisition::push_schedule;
                if (want_sched != p.strategy.schedule.has_value()) return false;
                return p.strategy.sampling_rate.count() > 0 &&
                       p.strategy.comm_frequency.count() > 0;
            } else if constexpr (std::is_same_v<T, Reading>) {
                return !m.sensor_id.empty() && !m.phenomenon.empty();
            } else {
                return true;
            }
        },
        msg);
}

std::string encode_message(const Message& msg) {
    return std::visit(
        [](const auto& m) -> std::string {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Identity>) {
                std::vector<std::string> segs{"IAM", "id=" + m.who.id, "model=" + m.who.model,
                                              "mfr=" + m.who.manufacturer};
                for (const auto& [k, v] : m.extras) segs.push_back(k + "=" + v);
                return join_segments(segs);
            } else if constexpr (std::is_same_v<T, ProfileMsg>) {
                const auto& p = m.profile;
                std::vector<std::string> segs{
                    "PRF",
                    "id=" + p.identity.id,
                    "model=" + p.identity.model,
                    "mfr=" + p.identity.manufacturer,
                    "phen=" + join_phenomena(p.phenomena),
                    "modes=" + join_modes(p.supported_modes),
                    "acq=" + std::string(to_string(p.strategy.acquisition)),
                    "rate=" + std::to_string(p.strategy.sampling_rate.count()),
                    "freq=" + std::to_string(p.strategy.comm_frequency.count()),
                };
                if (p.strategy.schedule) {
                    segs.push_back("sched=" + render_schedule(*p.strategy.schedule));
                }
                return join_segments(segs);
            } else if constexpr (std::is_same_v<T, Reading>) {
                return join_segments({"RDG", "id=" + m.sensor_id, "phen=" + m.phenomenon,
                                      "value=" + format_value(m.value), "unit=" + m.unit,
                                      "ts=" + std::to_string(m.timestamp.ms)});
            } else if constexpr (std::is_same_v<T, Ack>) {
                return join_segments({"ACK", std::string(to_string(m.of))});
            } else {
                return join_segments({"ERR", std::string(to_string(m.code)), m.detail});
            }
        },
        msg);
}

Decoded<Message> decode_message(std::string_view line) {
    auto split = split_segments(line);
    if (auto* err = std::get_if<WireError>(&split)) return *err;
    const auto& segs = std::get<std::vector<std::string>>(split);
    const auto& head = segs[0];

    if (head == "IAM") {
        auto kv = parse_kv(segs, 1);
        if (auto* err = std::get_if<WireError>(&kv)) return *err;
        auto& pairs = std::get<KvPairs>(kv);
        Identity ident;
        bool seen[3] = {false, false, false};
        for (auto& [k, v] : pairs.pairs) {
            int which = k == "id" ? 0 : k == "model" ? 1 : k == "mfr" ? 2 : -1;
            if (which >= 0) {
                if (seen[which]) {
                    return WireError{WireErrc::bad_value, "duplicate identity key: " + k};
                }
                seen[which] = true;
                if (which == 0) ident.who.id = v;
                if (which == 1) ident.who.model = v;
                if (which == 2) ident.who.manufacturer = v;
            } else {
                ident.extras.emplace_back(k, v);
            }
        }
        if (!ident.who.valid()) {
            return WireError{WireErrc::bad_value, "identity requires id, model, mfr"};
        }
        return Message{std::move(ident)};
    }

    if (head == "PRF") {
        auto kv = parse_kv(segs, 1);
        if (auto* err = std::get_if<WireError>(&kv)) return *err;
        const auto& pairs = std::get<KvPairs>(kv);
        const auto* id = pairs.find("id");
        const auto* model = pairs.find("model");
        const auto* mfr = pairs.find("mfr");
        const auto* phen = pairs.find("phen");
        const auto* modes = pairs.find("modes");
        const auto* acq = pairs.find("acq");
        const auto* rate = pairs.find("rate");
        const auto* freq = pairs.find("freq");
        if (!id || !model || !mfr || !phen || !modes || !acq || !rate || !freq) {
            return WireError{WireErrc::bad_arity, "profile missing required keys"};
        }
        SensorProfile p;
        p.identity = {*id, *model, *mfr};
        if (!p.identity.valid()) {
            return WireError{WireErrc::bad_value, "profile identity incomplete"};
        }
        for (const auto& item : split_list(*phen, ';')) {
            auto colon = item.find(':');
            if (colon == std::string::npos) {
                return WireError{WireErrc::bad_value, "bad phenomenon: " + item};
            }
            p.phenomena.push_back({item.substr(0, colon), item.substr(colon + 1)});
        }
        if (p.phenomena.empty()) {
            return WireError{WireErrc::bad_value, "profile has no phenomena"};
        }
        for (const auto& item : split_list(*modes, ';')) {
            auto a = acquisition_from_string(item);
            if (!a) return WireError{WireErrc::bad_value, "bad acquisition mode: " + item};
            p.supported_modes.push_back(*a);
        }
        auto a = acquisition_from_string(*acq);
        if (!a) return WireError{WireErrc::bad_value, "bad acquisition: " + *acq};
        p.strategy.acquisition = *a;
        auto r = parse_i64(*rate);
        auto f = parse_i64(*freq);
        if (!r || !f || *r <= 0 || *f <= 0) {
            return WireError{WireErrc::bad_value, "profile rates must be positive"};
        }
        p.strategy.sampling_rate = std::chrono::seconds(*r);
        p.strategy.comm_frequency = std::chrono::seconds(*f);
        if (const auto* sched = pairs.find("sched")) {
            auto parsed = parse_schedule(*sched);
            if (auto* err = std::get_if<ScheduleError>(&parsed)) {
                return WireError{WireErrc::bad_value,
                                 "bad embedded schedule: " + err->detail};
            }
            p.strategy.schedule = std::move(std::get<Schedule>(parsed));
        }
        bool want_sched = p.strategy.acquisition == Acquisition::push_schedule;
        if (want_sched != p.strategy.schedule.has_value()) {
            return WireError{WireErrc::bad_value,
                             "schedule presence inconsistent with acquisition"};
        }
        return Message{ProfileMsg{std::move(p)}};
    }

    if (head == "RDG") {
        auto kv = parse_kv(segs, 1);
        if (auto* err = std::get_if<WireError>(&kv)) return *err;
        const auto& pairs = std::get<KvPairs>(kv);
        const auto* id = pairs.find("id");
        const auto* phen = pairs.find("phen");
        const auto* value = pairs.find("value");
        const auto* unit = pairs.find("unit");
        const auto* ts = pairs.find("ts");
        if (!id || !phen || !value || !unit || !ts) {
            return WireError{WireErrc::bad_arity, "reading missing required keys"};
        }
        char* end = nullptr;
        double v = std::strtod(value->c_str(), &end);
        if (end != value->c_str() + value->size() || value->empty()) {
            return WireError{WireErrc::bad_value, "bad reading value: " + *value};
        }
        auto t = parse_i64(*ts);
        if (!t) return WireError{WireErrc::bad_value, "bad reading timestamp: " + *ts};
        return Message{Reading{*id, *phen, v, *unit, TimePoint{*t}}};
    }

    if (head == "ACK") {
        if (segs.size() != 2) {
            return WireError{WireErrc::bad_arity, "ACK: expected 2 segments"};
        }
        auto tag = command_tag_from_string(segs[1]);
        if (!tag) return WireError{WireErrc::bad_value, "ACK of unknown tag: " + segs[1]};
        return Message{Ack{*tag}};
    }

    if (head == "ERR") {
        if (segs.size() != 3) {
            return WireError{WireErrc::bad_arity, "ERR: expected 3 segments"};
        }
        auto code = err_code_from_string(segs[1]);
        if (!code) return WireError{WireErrc::bad_value, "unknown error code: " + segs[1]};
        return Message{Err{*code, segs[2]}};
    }

    return WireError{WireErrc::unknown_tag, "unknown message tag: " + head};
}

}  // namespace caddot::protocol
