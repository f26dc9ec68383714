#include "caddot/sensor/core.hpp"

namespace caddot::sensor {

using namespace caddot::protocol;

std::string_view to_string(Mode m) {
    switch (m) {
        case Mode::booting: return "BOOTING";
        case Mode::seeking: return "SEEKING";
        case Mode::listening: return "LISTENING";
        case Mode::push_temp: return "PUSH_TEMP";
        case Mode::push_scheduled: return "PUSH_SCHEDULED";
        case Mode::stopped: return "STOPPED";
        case Mode::direct: return "DIRECT";
    }
    return "?";
}

SensorCore::SensorCore(SensorSpec spec) : spec_(std::move(spec)) {
    codec_ = make_dialect_codec(spec_.dialect);
    // Factory defaults: pull-only at 60 s until configured otherwise.
    strategy_ = SensingStrategy{};
    strategy_.sampling_rate = std::chrono::seconds(60);
    strategy_.comm_frequency = std::chrono::seconds(60);
    strategy_.acquisition = Acquisition::pull;
    for (const auto& p : spec_.phenomena) {
        pull_walks_.emplace_back(p.seed ^ 0x5bd1e995);
    }
}

void SensorCore::on_new_connection() {
    codec_->on_new_connection();
}

void SensorCore::set_telemetry(std::int64_t boot_ms, std::int64_t scan_ms,
                               std::int64_t conn_ms) {
    telemetry_ = {{"boot_ms", std::to_string(boot_ms)},
                  {"scan_ms", std::to_string(scan_ms)},
                  {"conn_ms", std::to_string(conn_ms)}};
}

std::string SensorCore::out(const Message& msg, bool who_reply) {
    return codec_->outbound(msg, who_reply);
}

SensorProfile SensorCore::profile() const {
    SensorProfile p;
    p.identity = spec_.identity;
    for (const auto& ph : spec_.phenomena) p.phenomena.push_back({ph.name, ph.unit});
    p.supported_modes = {Acquisition::pull, Acquisition::push_interval,
                         Acquisition::push_schedule};
    p.strategy = strategy_;
    if (mode_ == Mode::push_temp) {
        p.strategy.acquisition = Acquisition::push_interval;
    }
    if (p.strategy.acquisition == Acquisition::push_schedule && schedule_) {
        p.strategy.schedule = schedule_;
    } else {
        p.strategy.schedule.reset();
        if (p.strategy.acquisition == Acquisition::push_schedule) {
            p.strategy.acquisition = Acquisition::pull;  // schedule lost; stay coherent
        }
    }
    return p;
}

SensorCore::Result SensorCore::handle_line(std::string_view line, TimePoint now) {
    auto in = codec_->inbound(line);
    if (!in.replies.empty()) {
        return {std::move(in.replies), {}};
    }
    if (in.error) {
        return {{out(Message{*in.error})}, {}};
    }
    return apply(*in.command, now);
}

SensorCore::Result SensorCore::apply(const Command& cmd, TimePoint now) {
    Result r;
    bool who = std::holds_alternative<Who>(cmd);
    bool ok = true;

    if (who) {
        Identity ident{spec_.identity, telemetry_};
        r.replies.push_back(out(Message{ident}, true));
        return r;
    }

    if (const auto* pull = std::get_if<Pull>(&cmd)) {
        (void)pull;
        const auto& ph = spec_.phenomena.front();
        Reading reading{spec_.identity.id, ph.name, pull_walks_.front().next(), ph.unit, now};
        r.replies.push_back(out(Message{reading}));
    } else if (const auto* tp = std::get_if<TemporaryPush>(&cmd)) {
        temp_ = TempPush{tp->sampling_rate, tp->comm_frequency, tp->duration};
        if (mode_ != Mode::direct) mode_ = Mode::push_temp;
        r.effects.start_temp_push = temp_;
        r.replies.push_back(out(Message{Ack{CommandTag::temporary_push}}));
    } else if (std::holds_alternative<SchedulePush>(cmd)) {
        if (!schedule_) {
            ok = false;
            r.replies.push_back(out(Message{Err{ErrCode::bad_value, "no schedule configured"}}));
        } else {
            strategy_.acquisition = Acquisition::push_schedule;
            if (mode_ != Mode::direct) mode_ = Mode::push_scheduled;
            r.effects.rearm = true;
            r.replies.push_back(out(Message{Ack{CommandTag::schedule_push}}));
        }
    } else if (const auto* sr = std::get_if<SetSamplingRate>(&cmd)) {
        strategy_.sampling_rate = sr->rate;
        r.replies.push_back(out(Message{Ack{CommandTag::set_sampling_rate}}));
    } else if (const auto* cf = std::get_if<SetCommFrequency>(&cmd)) {
        strategy_.comm_frequency = cf->frequency;
        r.replies.push_back(out(Message{Ack{CommandTag::set_comm_frequency}}));
    } else if (const auto* sch = std::get_if<SetSchedule>(&cmd)) {
        if (sch->ftp.server == kInlineFetchServer) {
            auto parsed = parse_schedule(sch->ftp.path);
            if (auto* err = std::get_if<ScheduleError>(&parsed)) {
                ok = false;
                r.replies.push_back(out(Message{Err{
                    ErrCode::syntax_error,
                    std::string(to_string(err->code)) + " line " + std::to_string(err->line) +
                        ": " + err->detail}}));
            } else {
                schedule_ = std::move(std::get<Schedule>(parsed));
                strategy_.acquisition = Acquisition::push_schedule;
                r.effects.rearm = true;
                r.replies.push_back(out(Message{Ack{CommandTag::set_schedule}}));
            }
        } else {
            // Reply deferred until the runtime has fetched the file.
            r.effects.fetch = sch->ftp;
        }
    } else if (const auto* net = std::get_if<SetNetwork>(&cmd)) {
        net_ = net->net;
        r.effects.go_direct = true;
        r.replies.push_back(out(Message{Ack{CommandTag::set_network}}));
    } else if (std::holds_alternative<Stop>(cmd)) {
        strategy_.acquisition = Acquisition::stop;
        if (mode_ != Mode::direct) mode_ = Mode::stopped;
        r.effects.rearm = true;
        r.replies.push_back(out(Message{Ack{CommandTag::stop}}));
    } else if (std::holds_alternative<GetProfile>(cmd)) {
        r.replies.push_back(out(Message{ProfileMsg{profile()}}));
    }

    bool replied_with_error = !ok;
    if (!replied_with_error && codec_->close_after_command_reply() &&
        !r.effects.go_direct && !r.effects.fetch) {
        r.effects.close_connection = true;
    }
    return r;
}

SensorCore::Result SensorCore::complete_fetch(const std::variant<Schedule, Err>& outcome) {
    Result r;
    if (const auto* err = std::get_if<Err>(&outcome)) {
        r.replies.push_back(out(Message{*err}));
        return r;
    }
    schedule_ = std::get<Schedule>(outcome);
    strategy_.acquisition = Acquisition::push_schedule;
    r.effects.rearm = true;
    r.effects.close_connection = codec_->close_after_command_reply();
    r.replies.push_back(out(Message{Ack{CommandTag::set_schedule}}));
    return r;
}

void SensorCore::confirm_direct() {
    mode_ = Mode::direct;
}

std::string SensorCore::direct_failed() {
    net_.reset();
    if (mode_ != Mode::direct) mode_ = Mode::listening;
    return out(Message{Err{ErrCode::sink_refused, "sink rejected credentials"}});
}

void SensorCore::temp_expired() {
    temp_.reset();
    if (mode_ == Mode::push_temp) mode_ = Mode::listening;
}

}  // namespace caddot::sensor
