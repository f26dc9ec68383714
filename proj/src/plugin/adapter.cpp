#include "caddot/plugin/adapter.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "caddot/protocol/command.hpp"

namespace caddot::plugin {

using namespace caddot::protocol;
using sensor::DialectId;

std::string_view to_string(AdapterErrc code) {
    switch (code) {
        case AdapterErrc::dialect_mismatch: return "DialectMismatch";
        case AdapterErrc::timeout: return "Timeout";
        case AdapterErrc::bad_value: return "BadValue";
        case AdapterErrc::rejected: return "Rejected";
        case AdapterErrc::plugin_unavailable: return "PluginUnavailable";
        case AdapterErrc::link_lost: return "LinkLost";
    }
    return "?";
}

namespace {

bool err_tagged(std::string_view raw) {
    return raw.rfind("[ERR]", 0) == 0;
}

class DialectAdapter final : public Adapter {
public:
    DialectAdapter(AdapterDescriptor descriptor, DialectId dialect, SessionLink& link,
                   std::chrono::milliseconds reply_timeout)
        : descriptor_(std::move(descriptor)), dialect_(dialect), link_(link),
          timeout_(reply_timeout) {}

    void set_sampling_rate(std::chrono::seconds rate) override {
        if (rate.count() <= 0) throw AdapterError(AdapterErrc::bad_value, "rate must be > 0");
        expect_ack(exchange(Command{SetSamplingRate{rate}}), CommandTag::set_sampling_rate);
    }

    void set_communication_frequency(std::chrono::seconds freq) override {
        if (freq.count() <= 0) throw AdapterError(AdapterErrc::bad_value, "freq must be > 0");
        expect_ack(exchange(Command{SetCommFrequency{freq}}), CommandTag::set_comm_frequency);
    }

    void set_schedule(const FetchSettings& ftp) override {
        if (!ftp.valid()) throw AdapterError(AdapterErrc::bad_value, "incomplete settings");
        expect_ack(exchange(Command{SetSchedule{ftp}}), CommandTag::set_schedule);
    }

    void set_network_settings(const NetworkSettings& net) override {
        if (!net.valid()) throw AdapterError(AdapterErrc::bad_value, "incomplete settings");
        expect_ack(exchange(Command{SetNetwork{net}}, /*expect_reconnect=*/false),
                   CommandTag::set_network);
    }

    SensorProfile get_sensor_profile() override {
        auto msg = exchange(Command{GetProfile{}});
        if (auto* p = std::get_if<ProfileMsg>(&msg)) return p->profile;
        throw AdapterError(AdapterErrc::dialect_mismatch, "expected a profile reply");
    }

    Reading pull() override {
        auto msg = exchange(Command{Pull{}});
        if (auto* r = std::get_if<Reading>(&msg)) return *r;
        throw AdapterError(AdapterErrc::dialect_mismatch, "expected a reading reply");
    }

    void temporary_push(std::chrono::seconds rate, std::chrono::seconds freq,
                        std::chrono::seconds duration) override {
        if (rate.count() <= 0 || freq.count() <= 0 || duration.count() <= 0) {
            throw AdapterError(AdapterErrc::bad_value, "push parameters must be > 0");
        }
        expect_ack(exchange(Command{TemporaryPush{rate, freq, duration}}),
                   CommandTag::temporary_push);
    }

    void schedule_push() override {
        expect_ack(exchange(Command{SchedulePush{}}), CommandTag::schedule_push);
    }

    void stop() override { expect_ack(exchange(Command{Stop{}}), CommandTag::stop); }

    const AdapterDescriptor& descriptor() const override { return descriptor_; }

private:
    void expect_ack(const Message& msg, CommandTag tag) {
        const auto* ack = std::get_if<Ack>(&msg);
        if (!ack || ack->of != tag) {
            throw AdapterError(AdapterErrc::dialect_mismatch, "expected an acknowledgement");
        }
    }

    transport::Session& live_session() {
        if (need_fresh_) {
            auto& s = link_.await_replacement(timeout_);
            need_fresh_ = false;
            return s;
        }
        return link_.session();
    }

    // One command, one translated reply. Readings from push traffic are
    // skipped while waiting.
    Message exchange(const Command& cmd, bool expect_reconnect_default = true) {
        std::lock_guard<std::mutex> g(mu_);
        auto& session = live_session();
        auto line = encode_command(cmd);

        try {
            if (dialect_ == DialectId::B) {
                session.send(sensor::kHelloLine);
                await_hello_ack(session);
                session.send(sensor::b_translate_out(line));
            } else if (dialect_ == DialectId::C) {
                session.send(sensor::reverse_after_tag_add_eoc(line));
            } else {
                session.send(line);
            }
        } catch (const transport::TransportError& e) {
            if (e.code() == transport::TransportErrc::timeout) {
                throw AdapterError(AdapterErrc::timeout, e.what());
            }
            throw AdapterError(AdapterErrc::link_lost, e.what());
        }

        auto msg = await_reply(session, std::holds_alternative<Pull>(cmd));
        if (const auto* err = std::get_if<Err>(&msg)) {
            throw to_adapter_error(*err);
        }
        if (dialect_ == DialectId::C && expect_reconnect_default && link_.renewable()) {
            need_fresh_ = true;  // the sensor drops the session after one command
        }
        return msg;
    }

    void await_hello_ack(transport::Session& session) {
        auto deadline_budget = timeout_;
        for (;;) {
            std::string raw = recv_or_timeout(session, deadline_budget);
            if (raw == sensor::kHelloAck) return;
            if (err_tagged(raw)) {
                throw AdapterError(AdapterErrc::dialect_mismatch,
                                   "handshake rejected: " + raw);
            }
            if (is_push_noise(raw)) continue;
            throw AdapterError(AdapterErrc::dialect_mismatch,
                               "unexpected handshake reply: " + raw);
        }
    }

    Message await_reply(transport::Session& session, bool pulling) {
        for (;;) {
            std::string raw = recv_or_timeout(session, timeout_);
            auto canonical = untranslate(raw);
            if (!canonical) {
                if (err_tagged(raw)) {
                    throw AdapterError(AdapterErrc::dialect_mismatch,
                                       "untranslatable error reply: " + raw);
                }
                continue;  // noise in another grammar; keep waiting
            }
            auto decoded = decode_message(*canonical);
            if (is_error(decoded)) {
                if (err_tagged(raw)) {
                    throw AdapterError(AdapterErrc::dialect_mismatch,
                                       "garbled error reply: " + raw);
                }
                continue;
            }
            auto msg = std::get<Message>(decoded);
            if (std::holds_alternative<Reading>(msg) && !pulling) continue;  // push noise
            return msg;
        }
    }

    std::string recv_or_timeout(transport::Session& session,
                                std::chrono::milliseconds budget) {
        try {
            return session.recv(budget);
        } catch (const transport::TransportError& e) {
            if (e.code() == transport::TransportErrc::timeout) {
                throw AdapterError(AdapterErrc::timeout, "no reply from sensor");
            }
            throw AdapterError(AdapterErrc::link_lost, e.what());
        }
    }

    bool is_push_noise(std::string_view raw) const {
        if (raw.rfind("[RDG]", 0) == 0) return true;
        if (dialect_ == DialectId::C && raw.rfind("[RDG", 0) == 0) return true;
        return false;
    }

    std::optional<std::string> untranslate(const std::string& raw) {
        switch (dialect_) {
            case DialectId::A: return raw;
            case DialectId::B: {
                if (raw == "[ACK][SRT]\n") return std::string("[ACK][SMP]\n");
                if (raw == "[ACK][CFQ]\n") return std::string("[ACK][DCF]\n");
                return raw;
            }
            case DialectId::C: {
                if (raw.rfind("[IAM]", 0) == 0) return raw;  // M1 is never translated
                return sensor::strip_eoc_unreverse(raw);
            }
        }
        return raw;
    }

    AdapterError to_adapter_error(const Err& err) {
        switch (err.code) {
            case ErrCode::dialect_mismatch:
            case ErrCode::unknown_tag:
            case ErrCode::malformed_line:
            case ErrCode::bad_arity:
                return AdapterError(AdapterErrc::dialect_mismatch, err.detail);
            default:
                return AdapterError(AdapterErrc::rejected,
                                    std::string(to_string(err.code)) + ": " + err.detail);
        }
    }

    AdapterDescriptor descriptor_;
    DialectId dialect_;
    SessionLink& link_;
    std::chrono::milliseconds timeout_;
    std::mutex mu_;
    bool need_fresh_ = false;
};

}  // namespace

AdapterHost::AdapterHost(std::string plugin_dir, std::chrono::milliseconds reply_timeout)
    : plugin_dir_(std::move(plugin_dir)), reply_timeout_(reply_timeout) {}

std::shared_ptr<Adapter> AdapterHost::activate(const AdapterDescriptor& descriptor,
                                               SessionLink& link) {
    {
        std::lock_guard<std::mutex> g(mu_);
        auto key = std::make_pair(descriptor.plugin_id, &link);
        if (auto it = active_.find(key); it != active_.end()) {
            if (auto live = it->second.lock()) return live;
        }
    }

    std::string dialect_name = descriptor.dialect;
    if (!descriptor.artifact.empty()) {
        auto path = std::filesystem::path(plugin_dir_) / descriptor.artifact;
        std::ifstream in(path);
        if (!in) {
            throw AdapterError(AdapterErrc::plugin_unavailable,
                               "artifact missing: " + path.string());
        }
        std::ostringstream ss;
        ss << in.rdbuf();
        auto j = nlohmann::json::parse(ss.str(), nullptr, false);
        if (j.is_discarded() || !j.contains("dialect")) {
            throw AdapterError(AdapterErrc::plugin_unavailable,
                               "artifact unreadable: " + path.string());
        }
        dialect_name = j["dialect"].get<std::string>();
    }

    auto dialect = sensor::dialect_from_string(dialect_name);
    if (!dialect) {
        throw AdapterError(AdapterErrc::plugin_unavailable,
                           "no implementation for dialect " + dialect_name);
    }

    auto adapter =
        std::make_shared<DialectAdapter>(descriptor, *dialect, link, reply_timeout_);
    std::lock_guard<std::mutex> g(mu_);
    active_[{descriptor.plugin_id, &link}] = adapter;
    return adapter;
}

}  // namespace caddot::plugin
