#include "caddot/registry/planner.hpp"

namespace caddot::registry {

using protocol::Acquisition;
using protocol::SensingStrategy;

SensingStrategy plan_strategy(const SensorRecord& record, const Context& context) {
    SensingStrategy s;
    s.sampling_rate = record.base_rate;
    s.comm_frequency = record.base_freq;

    // R2: frost dependency.
    if (record.measures_phenomenon("humidity") && !record.peer_temperature.empty()) {
        auto peer = context.peer(record.peer_temperature);
        if (peer == PeerStatus::faulty || peer == PeerStatus::absent) {
            s.acquisition = Acquisition::stop;
            s.schedule.reset();
            return s;
        }
    }

    // R1: seasonal/diurnal sampling boost.
    if (context.season == Season::winter || context.time_of_day == DayPhase::night) {
        auto halved = record.base_rate.count() / 2;
        s.sampling_rate = std::chrono::seconds(halved < 1 ? 1 : halved);
    }

    // R3: schedule-gated by default.
    if (record.base_schedule && !record.base_schedule->empty()) {
        s.acquisition = Acquisition::push_schedule;
        s.schedule = record.base_schedule;
    } else {
        s.acquisition = Acquisition::pull;
        s.schedule.reset();
    }
    return s;
}

}  // namespace caddot::registry
