#include "caddot/configurator/pipeline.hpp"

#include "caddot/protocol/command.hpp"
#include "caddot/registry/service.hpp"

namespace caddot::configurator {

using namespace caddot::protocol;
using plugin::AdapterErrc;
using plugin::AdapterError;
using registry::RegistryError;

namespace {

std::string reason_of(const AdapterError& e, Step step) {
    switch (e.code()) {
        case AdapterErrc::dialect_mismatch: return "DialectMismatch";
        case AdapterErrc::timeout:
            return step == Step::retrieve ? "ProfileTimeout" : "ConfigRejected";
        case AdapterErrc::bad_value:
        case AdapterErrc::rejected: return "ConfigRejected";
        case AdapterErrc::plugin_unavailable: return "PluginUnavailable";
        case AdapterErrc::link_lost: return "Departed";
    }
    return "ConfigRejected";
}

std::string reason_of(const RegistryError& e) {
    switch (e.code()) {
        case ErrCode::unknown_sensor: return "UnknownSensor";
        case ErrCode::no_adapter: return "NoAdapter";
        case ErrCode::plugin_unavailable: return "PluginUnavailable";
        default: return "RegistryError";
    }
}

// Retries transient timeouts with backoff; everything else surfaces at once.
template <class Fn>
void with_retries(Fn&& fn, const PipelineConfig& cfg, Clock& clock) {
    for (int attempt = 1;; ++attempt) {
        try {
            fn();
            return;
        } catch (const AdapterError& e) {
            if (e.code() != AdapterErrc::timeout || attempt > cfg.retries) throw;
            clock.sleep_for(cfg.retry_backoff);
        }
    }
}

// Steps 6-10 shared by initial configuration and reconfiguration.
std::optional<SessionTrace> apply_strategy(TraceBuilder& builder, plugin::Adapter& adapter,
                                           const SensingStrategy& strategy,
                                           const std::string& sensor_id,
                                           const std::string& token,
                                           const PipelineConfig& cfg, Clock& clock) {
    bool stopping = strategy.acquisition == Acquisition::stop;

    builder.begin(Step::conf_rate);
    try {
        if (stopping) {
            with_retries([&] { adapter.stop(); }, cfg, clock);
        } else {
            with_retries([&] { adapter.set_sampling_rate(strategy.sampling_rate); }, cfg,
                         clock);
        }
        builder.end_ok();
    } catch (const AdapterError& e) {
        return builder.fail(reason_of(e, Step::conf_rate));
    }

    if (stopping) {
        builder.skip(Step::conf_freq, "strategy is stop");
        builder.skip(Step::conf_sched, "strategy is stop");
    } else {
        builder.begin(Step::conf_freq);
        try {
            with_retries([&] { adapter.set_communication_frequency(strategy.comm_frequency); },
                         cfg, clock);
            builder.end_ok();
        } catch (const AdapterError& e) {
            return builder.fail(reason_of(e, Step::conf_freq));
        }

        if (strategy.acquisition == Acquisition::push_schedule && strategy.schedule) {
            builder.begin(Step::conf_sched);
            try {
                FetchSettings inline_transfer{std::string(kInlineFetchServer),
                                              render_schedule(*strategy.schedule), "-", "-"};
                with_retries([&] { adapter.set_schedule(inline_transfer); }, cfg, clock);
                with_retries([&] { adapter.schedule_push(); }, cfg, clock);
                builder.end_ok();
            } catch (const AdapterError& e) {
                return builder.fail(reason_of(e, Step::conf_sched));
            }
        } else {
            builder.skip(Step::conf_sched, "no schedule in strategy");
        }
    }

    long gen_before = 0;
    try {
        gen_before = cfg.registry->wait_direct(sensor_id, std::chrono::milliseconds(0), 0).gen;
    } catch (const RegistryError& e) {
        return builder.fail_at(Step::conf_net, reason_of(e));
    }

    builder.begin(Step::conf_net);
    try {
        NetworkSettings net{cfg.access_point, cfg.auth_key, cfg.sink_host, cfg.sink_port,
                            token};
        with_retries([&] { adapter.set_network_settings(net); }, cfg, clock);
        builder.end_ok();
    } catch (const AdapterError& e) {
        return builder.fail(reason_of(e, Step::conf_net));
    }

    builder.begin(Step::direct);
    try {
        auto status = cfg.registry->wait_direct(sensor_id, cfg.direct_timeout, gen_before + 1);
        if (status.gen < gen_before + 1) {
            return builder.fail("DirectConnectFailed");
        }
        builder.end_ok();
    } catch (const RegistryError&) {
        return builder.fail("DirectConnectFailed");
    }
    return std::nullopt;
}

}  // namespace

SessionTrace run_configuration(const Arrival& arrival, plugin::SessionLink& link,
                               const PipelineConfig& cfg, TraceBuilder builder,
                               Clock& clock) {
    const auto& id = arrival.identity.id;

    // Phase identify+find: sub-spans of the retrieve step.
    builder.begin(Step::retrieve);
    registry::RecordView record;
    std::shared_ptr<plugin::Adapter> adapter;
    try {
        builder.begin_sub("identify");
        record = cfg.registry->identify(arrival.identity);
        builder.end_sub();
    } catch (const RegistryError& e) {
        return builder.fail(reason_of(e));
    }
    try {
        builder.begin_sub("find");
        auto descriptor = cfg.registry->find_plugin(id);
        adapter = cfg.host->activate(descriptor, link);
        builder.end_sub();
    } catch (const RegistryError& e) {
        return builder.fail(reason_of(e));
    } catch (const AdapterError& e) {
        return builder.fail(reason_of(e, Step::retrieve));
    }

    // Phase retrieve: the complete profile.
    SensorProfile profile;
    try {
        with_retries([&] { profile = adapter->get_sensor_profile(); }, cfg, clock);
        builder.end_ok();
    } catch (const AdapterError& e) {
        return builder.fail(reason_of(e, Step::retrieve));
    }

    // Phases reason+register: registry sub-spans; their wall time lands inside
    // step 6's span, which starts where step 5 ended.
    SensingStrategy strategy;
    std::string token;
    try {
        builder.begin_sub("reason");
        strategy = cfg.registry->plan(id);
        builder.end_sub();
        builder.begin_sub("register");
        token = cfg.registry->register_sensor(id, profile, strategy).token;
        builder.end_sub();
    } catch (const RegistryError& e) {
        return builder.fail_at(Step::conf_rate, reason_of(e));
    }

    auto failed = apply_strategy(builder, *adapter, strategy, id, token, cfg, clock);
    if (failed) return *failed;
    return builder.finish();
}

SessionTrace run_reconfiguration(const std::string& sensor_id, const std::string& transport,
                                 const PipelineConfig& cfg, Clock& clock) {
    TraceBuilder builder(sensor_id, transport, clock);

    // A session over the sensor's direct connection, one relayed line per
    // exchange.
    class RelaySession final : public transport::Session {
    public:
        RelaySession(registry::Client& client, std::string id,
                     std::chrono::milliseconds timeout)
            : client_(client), id_(std::move(id)), timeout_(timeout) {}

        void send(std::string_view line) override {
            try {
                auto reply = client_.relay(id_, std::string(line), timeout_);
                if (reply.empty() || reply.back() != '\n') reply += '\n';
                inbox_.push_back(std::move(reply));
            } catch (const RegistryError& e) {
                throw transport::TransportError(transport::TransportErrc::unreachable,
                                                e.what());
            }
        }

        std::string recv(std::chrono::milliseconds) override {
            if (inbox_.empty()) {
                throw transport::TransportError(transport::TransportErrc::timeout,
                                                "no relayed reply pending");
            }
            auto line = inbox_.front();
            inbox_.erase(inbox_.begin());
            return line;
        }

        void close() override {}
        bool is_open() const override { return true; }
        transport::Endpoint peer() const override {
            return {transport::TransportKind::tcp, "relay:" + id_};
        }

    private:
        registry::Client& client_;
        std::string id_;
        std::chrono::milliseconds timeout_;
        std::vector<std::string> inbox_;
    };

    RelaySession relay(*cfg.registry, sensor_id, cfg.step_timeout);
    plugin::FixedLink link(relay);

    std::shared_ptr<plugin::Adapter> adapter;
    SensingStrategy strategy;
    std::string token;
    try {
        auto descriptor = cfg.registry->find_plugin(sensor_id);
        adapter = cfg.host->activate(descriptor, link);

        builder.begin_sub("reason");
        strategy = cfg.registry->plan(sensor_id);
        builder.end_sub();

        // Read the current profile over the relay so registration stays
        // faithful to the device.
        SensorProfile profile = adapter->get_sensor_profile();

        builder.begin_sub("register");
        token = cfg.registry->register_sensor(sensor_id, profile, strategy).token;
        builder.end_sub();
    } catch (const RegistryError& e) {
        auto code = e.code();
        return builder.fail_at(Step::conf_rate,
                               code == ErrCode::unreachable ? "Unreachable" : reason_of(e));
    } catch (const AdapterError& e) {
        // Over a relay, a lost link means the sensor is gone.
        if (e.code() == AdapterErrc::link_lost || e.code() == AdapterErrc::timeout) {
            return builder.fail_at(Step::conf_rate, "Unreachable");
        }
        return builder.fail_at(Step::conf_rate, reason_of(e, Step::conf_rate));
    } catch (const transport::TransportError&) {
        return builder.fail_at(Step::conf_rate, "Unreachable");
    }

    auto failed = apply_strategy(builder, *adapter, strategy, sensor_id, token, cfg, clock);
    if (failed) return *failed;
    return builder.finish();
}

}  // namespace caddot::configurator
