#include "caddot/protocol/command.hpp"

#include <charconv>

namespace caddot::protocol {

namespace {

std::optional<std::int64_t> parse_i64(std::string_view s) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

// Positive integer seconds, the only numeric payload commands carry.
Decoded<std::chrono::seconds> parse_seconds(std::string_view s, std::string_view what) {
    auto v = parse_i64(s);
    if (!v) {
        return WireError{WireErrc::bad_value, std::string(what) + " is not a number"};
    }
    if (*v <= 0) {
        return WireError{WireErrc::bad_value, std::string(what) + " must be positive"};
    }
    return std::chrono::seconds(*v);
}

Decoded<int> parse_port(std::string_view s) {
    auto v = parse_i64(s);
    if (!v) return WireError{WireErrc::bad_value, "port is not a number"};
    if (*v < 1 || *v > 65535) return WireError{WireErrc::bad_value, "port out of range"};
    return static_cast<int>(*v);
}

WireError arity_error(std::string_view cmd, std::size_t want, std::size_t got) {
    return WireError{WireErrc::bad_arity, std::string(cmd) + ": expected " +
                                              std::to_string(want) + " segments, got " +
                                              std::to_string(got)};
}

}  // namespace

std::string_view to_string(CommandTag tag) {
    switch (tag) {
        case CommandTag::who: return "WHO";
        case CommandTag::pull: return "PL";
        case CommandTag::temporary_push: return "PS";
        case CommandTag::schedule_push: return "SC";
        case CommandTag::set_sampling_rate: return "SMP";
        case CommandTag::set_comm_frequency: return "DCF";
        case CommandTag::set_schedule: return "SCH";
        case CommandTag::set_network: return "NET";
        case CommandTag::stop: return "STP";
        case CommandTag::get_profile: return "CPR";
    }
    return "?";
}

std::optional<CommandTag> command_tag_from_string(std::string_view s) {
    static constexpr CommandTag all[] = {
        CommandTag::who,           CommandTag::pull,          CommandTag::temporary_push,
        CommandTag::schedule_push, CommandTag::set_sampling_rate,
        CommandTag::set_comm_frequency, CommandTag::set_schedule, CommandTag::set_network,
        CommandTag::stop,          CommandTag::get_profile,
    };
    for (auto t : all) {
        if (to_string(t) == s) return t;
    }
    return std::nullopt;
}

CommandTag tag_of(const Command& cmd) {
    return std::visit(
        [](const auto& c) -> CommandTag {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, Who>) return CommandTag::who;
            if constexpr (std::is_same_v<T, Pull>) return CommandTag::pull;
            if constexpr (std::is_same_v<T, TemporaryPush>) return CommandTag::temporary_push;
            if constexpr (std::is_same_v<T, SchedulePush>) return CommandTag::schedule_push;
            if constexpr (std::is_same_v<T, SetSamplingRate>) return CommandTag::set_sampling_rate;
            if constexpr (std::is_same_v<T, SetCommFrequency>)
                return CommandTag::set_comm_frequency;
            if constexpr (std::is_same_v<T, SetSchedule>) return CommandTag::set_schedule;
            if constexpr (std::is_same_v<T, SetNetwork>) return CommandTag::set_network;
            if constexpr (std::is_same_v<T, Stop>) return CommandTag::stop;
            if constexpr (std::is_same_v<T, GetProfile>) return CommandTag::get_profile;
        },
        cmd);
}

bool command_valid(const Command& cmd) {
    return std::visit(
        [](const auto& c) -> bool {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, TemporaryPush>) {
                return c.sampling_rate.count() > 0 && c.comm_frequency.count() > 0 &&
                       c.duration.count() > 0;
            } else if constexpr (std::is_same_v<T, SetSamplingRate>) {
                return c.rate.count() > 0;
            } else if constexpr (std::is_same_v<T, SetCommFrequency>) {
                return c.frequency.count() > 0;
            } else if constexpr (std::is_same_v<T, SetSchedule>) {
                return c.ftp.valid();
            } else if constexpr (std::is_same_v<T, SetNetwork>) {
                return c.net.valid();
            } else {
                return true;
            }
        },
        cmd);
}

std::string encode_command(const Command& cmd) {
    return std::visit(
        [](const auto& c) -> std::string {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, Who>) {
                return join_segments({"WHO"});
            } else if constexpr (std::is_same_v<T, Pull>) {
                return join_segments({"DAR", "PL"});
            } else if constexpr (std::is_same_v<T, TemporaryPush>) {
                return join_segments({"DAR", "PS", std::to_string(c.sampling_rate.count()),
                                      std::to_string(c.comm_frequency.count()),
                                      std::to_string(c.duration.count())});
            } else if constexpr (std::is_same_v<T, SchedulePush>) {
                return join_segments({"DAR", "SC"});
            } else if constexpr (std::is_same_v<T, SetSamplingRate>) {
                return join_segments({"CON", "SMP", std::to_string(c.rate.count())});
            } else if constexpr (std::is_same_v<T, SetCommFrequency>) {
                return join_segments({"CON", "DCF", std::to_string(c.frequency.count())});
            } else if constexpr (std::is_same_v<T, SetSchedule>) {
                return join_segments(
                    {"CON", "SCH", c.ftp.server, c.ftp.path, c.ftp.username, c.ftp.password});
            } else if constexpr (std::is_same_v<T, SetNetwork>) {
                return join_segments({"CON", "NET", c.net.access_point, c.net.auth_key,
                                      c.net.sink_address, std::to_string(c.net.sink_port),
                                      c.net.credential_token});
            } else if constexpr (std::is_same_v<T, Stop>) {
                return join_segments({"CON", "STP"});
            } else {
                return join_segments({"CON", "CPR"});
            }
        },
        cmd);
}

Decoded<Command> decode_command(std::string_view line) {
    auto split = split_segments(line);
    if (auto* err = std::get_if<WireError>(&split)) return *err;
    const auto& segs = std::get<std::vector<std::string>>(split);

    const auto& head = segs[0];
    if (head == "WHO") {
        if (segs.size() != 1) return arity_error("WHO", 1, segs.size());
        return Command{Who{}};
    }
    if (head == "DAR") {
        if (segs.size() < 2) return WireError{WireErrc::bad_arity, "DAR: missing subtag"};
        const auto& sub = segs[1];
        if (sub == "PL") {
            if (segs.size() != 2) return arity_error("DAR PL", 2, segs.size());
            return Command{Pull{}};
        }
        if (sub == "PS") {
            if (segs.size() != 5) return arity_error("DAR PS", 5, segs.size());
            auto rate = parse_seconds(segs[2], "sampling rate");
            if (auto* err = std::get_if<WireError>(&rate)) return *err;
            auto freq = parse_seconds(segs[3], "communication frequency");
            if (auto* err = std::get_if<WireError>(&freq)) return *err;
            auto dur = parse_seconds(segs[4], "duration");
            if (auto* err = std::get_if<WireError>(&dur)) return *err;
            return Command{TemporaryPush{std::get<std::chrono::seconds>(rate),
                                         std::get<std::chrono::seconds>(freq),
                                         std::get<std::chrono::seconds>(dur)}};
        }
        if (sub == "SC") {
            if (segs.size() != 2) return arity_error("DAR SC", 2, segs.size());
            return Command{SchedulePush{}};
        }
        return WireError{WireErrc::unknown_tag, "unknown DAR subtag: " + sub};
    }
    if (head == "CON") {
        if (segs.size() < 2) return WireError{WireErrc::bad_arity, "CON: missing subtag"};
        const auto& sub = segs[1];
        if (sub == "SMP") {
            if (segs.size() != 3) return arity_error("CON SMP", 3, segs.size());
            auto rate = parse_seconds(segs[2], "sampling rate");
            if (auto* err = std::get_if<WireError>(&rate)) return *err;
            return Command{SetSamplingRate{std::get<std::chrono::seconds>(rate)}};
        }
        if (sub == "DCF") {
            if (segs.size() != 3) return arity_error("CON DCF", 3, segs.size());
            auto freq = parse_seconds(segs[2], "communication frequency");
            if (auto* err = std::get_if<WireError>(&freq)) return *err;
            return Command{SetCommFrequency{std::get<std::chrono::seconds>(freq)}};
        }
        if (sub == "SCH") {
            if (segs.size() != 6) return arity_error("CON SCH", 6, segs.size());
            FetchSettings ftp{segs[2], segs[3], segs[4], segs[5]};
            if (!ftp.valid()) {
                return WireError{WireErrc::bad_value, "SCH: empty fetch field"};
            }
            return Command{SetSchedule{std::move(ftp)}};
        }
        if (sub == "NET") {
            if (segs.size() != 7) return arity_error("CON NET", 7, segs.size());
            auto port = parse_port(segs[5]);
            if (auto* err = std::get_if<WireError>(&port)) return *err;
            NetworkSettings net{segs[2], segs[3], segs[4], std::get<int>(port), segs[6]};
            if (!net.valid()) {
                return WireError{WireErrc::bad_value, "NET: empty credential token"};
            }
            return Command{SetNetwork{std::move(net)}};
        }
        if (sub == "STP") {
            if (segs.size() != 2) return arity_error("CON STP", 2, segs.size());
            return Command{Stop{}};
        }
        if (sub == "CPR") {
            if (segs.size() != 2) return arity_error("CON CPR", 2, segs.size());
            return Command{GetProfile{}};
        }
        return WireError{WireErrc::unknown_tag, "unknown CON subtag: " + sub};
    }
    return WireError{WireErrc::unknown_tag, "unknown command tag: " + head};
}

}  // namespace caddot::protocol
