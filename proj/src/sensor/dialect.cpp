#include "caddot/sensor/dialect.hpp"

#include "caddot/protocol/wire.hpp"

namespace caddot::sensor {

using namespace caddot::protocol;

namespace {

ErrCode to_err_code(WireErrc c) {
    switch (c) {
        case WireErrc::malformed_line: return ErrCode::malformed_line;
        case WireErrc::unknown_tag: return ErrCode::unknown_tag;
        case WireErrc::bad_arity: return ErrCode::bad_arity;
        case WireErrc::bad_value: return ErrCode::bad_value;
    }
    return ErrCode::malformed_line;
}

bool is_who_line(std::string_view line) {
    auto split = split_segments(line);
    if (std::holds_alternative<WireError>(split)) return false;
    const auto& segs = std::get<std::vector<std::string>>(split);
    return segs.size() == 1 && segs[0] == "WHO";
}

DialectCodec::Inbound decode_canonical(std::string_view line) {
    DialectCodec::Inbound in;
    auto decoded = decode_command(line);
    if (auto* err = std::get_if<WireError>(&decoded)) {
        in.error = Err{to_err_code(err->code), err->detail};
    } else {
        in.command = std::get<Command>(decoded);
    }
    return in;
}

class CodecA final : public DialectCodec {
public:
    Inbound inbound(std::string_view line) override { return decode_canonical(line); }

    std::string outbound(const Message& msg, bool) override { return encode_message(msg); }

    DialectId id() const override { return DialectId::A; }
};

class CodecB final : public DialectCodec {
public:
    Inbound inbound(std::string_view line) override {
        Inbound in;
        if (is_who_line(line)) {
            in.command = Command{Who{}};
            return in;
        }
        if (line == kHelloLine) {
            armed_ = true;
            in.replies.push_back(std::string(kHelloAck));
            return in;
        }
        if (!armed_) {
            in.error = Err{ErrCode::dialect_mismatch, "expected [HLO] handshake"};
            return in;
        }
        armed_ = false;
        auto translated = b_translate_in(line);
        if (!translated) {
            in.error = Err{ErrCode::unknown_tag, "unknown dialect-B tag"};
            return in;
        }
        return decode_canonical(*translated);
    }

    std::string outbound(const Message& msg, bool who_reply) override {
        auto line = encode_message(msg);
        if (who_reply) return line;
        if (line == "[ACK][SMP]\n") return "[ACK][SRT]\n";
        if (line == "[ACK][DCF]\n") return "[ACK][CFQ]\n";
        return line;
    }

    void on_new_connection() override { armed_ = false; }

    DialectId id() const override { return DialectId::B; }

private:
    bool armed_ = false;
};

class CodecC final : public DialectCodec {
public:
    Inbound inbound(std::string_view line) override {
        Inbound in;
        if (is_who_line(line)) {
            in.command = Command{Who{}};
            return in;
        }
        auto canonical = strip_eoc_unreverse(line);
        if (!canonical) {
            in.error = Err{ErrCode::dialect_mismatch, "expected reversed [EOC] form"};
            return in;
        }
        return decode_canonical(*canonical);
    }

    std::string outbound(const Message& msg, bool who_reply) override {
        auto line = encode_message(msg);
        if (who_reply) return line;
        return reverse_after_tag_add_eoc(line);
    }

    bool close_after_command_reply() const override { return true; }

    DialectId id() const override { return DialectId::C; }
};

}  // namespace

std::string_view to_string(DialectId d) {
    switch (d) {
        case DialectId::A: return "A";
        case DialectId::B: return "B";
        case DialectId::C: return "C";
    }
    return "?";
}

std::optional<DialectId> dialect_from_string(std::string_view s) {
    if (s == "A") return DialectId::A;
    if (s == "B") return DialectId::B;
    if (s == "C") return DialectId::C;
    return std::nullopt;
}

std::string_view to_string(ProgramDesign p) {
    return p == ProgramDesign::cpd ? "CPD" : "SPD";
}

std::optional<ProgramDesign> program_from_string(std::string_view s) {
    if (s == "CPD") return ProgramDesign::cpd;
    if (s == "SPD") return ProgramDesign::spd;
    return std::nullopt;
}

std::string reverse_after_tag_add_eoc(std::string_view canonical_line) {
    auto split = split_segments(canonical_line);
    if (std::holds_alternative<WireError>(split)) return std::string(canonical_line);
    auto segs = std::get<std::vector<std::string>>(split);
    std::reverse(segs.begin() + 1, segs.end());
    segs.push_back("EOC");
    return join_segments(segs);
}

std::optional<std::string> strip_eoc_unreverse(std::string_view dialect_line) {
    auto split = split_segments(dialect_line);
    if (std::holds_alternative<WireError>(split)) return std::nullopt;
    auto segs = std::get<std::vector<std::string>>(split);
    if (segs.size() < 2 || segs.back() != "EOC") return std::nullopt;
    segs.pop_back();
    std::reverse(segs.begin() + 1, segs.end());
    return join_segments(segs);
}

namespace {

std::optional<std::string> swap_subtag(std::string_view line, std::string_view from,
                                       std::string_view to) {
    auto split = split_segments(line);
    if (std::holds_alternative<WireError>(split)) return std::nullopt;
    auto segs = std::get<std::vector<std::string>>(split);
    if (segs.size() >= 2 && segs[1] == from) {
        segs[1] = std::string(to);
        return join_segments(segs);
    }
    return std::nullopt;
}

}  // namespace

std::string b_translate_out(std::string_view canonical_line) {
    if (auto s = swap_subtag(canonical_line, "SMP", "SRT")) return *s;
    if (auto s = swap_subtag(canonical_line, "DCF", "CFQ")) return *s;
    return std::string(canonical_line);
}

std::optional<std::string> b_translate_in(std::string_view dialect_line) {
    auto split = split_segments(dialect_line);
    if (std::holds_alternative<WireError>(split)) return std::string(dialect_line);
    auto segs = std::get<std::vector<std::string>>(split);
    if (segs.size() >= 2) {
        // The canonical tags are not part of dialect B's vocabulary.
        if (segs[0] == "CON" && (segs[1] == "SMP" || segs[1] == "DCF")) return std::nullopt;
        if (segs[1] == "SRT") segs[1] = "SMP";
        if (segs[1] == "CFQ") segs[1] = "DCF";
    }
    return join_segments(segs);
}

std::unique_ptr<DialectCodec> make_dialect_codec(DialectId id) {
    switch (id) {
        case DialectId::A: return std::make_unique<CodecA>();
        case DialectId::B: return std::make_unique<CodecB>();
        case DialectId::C: return std::make_unique<CodecC>();
    }
    return nullptr;
}

}  // namespace caddot::sensor
