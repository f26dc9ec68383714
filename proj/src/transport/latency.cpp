#include "caddot/transport/latency.hpp"

namespace caddot::transport {

using std::chrono::milliseconds;

LatencyModel LatencyModel::emulation_profile() {
    LatencyModel m;
    m.tcp.scan = DelaySpec::uniform(milliseconds(200), milliseconds(600));
    m.udp.scan = DelaySpec::uniform(milliseconds(300), milliseconds(800));
    m.channel.scan = DelaySpec::uniform(milliseconds(6000), milliseconds(8000));
    for (auto* k : {&m.tcp, &m.udp, &m.channel}) {
        k->connect = DelaySpec::uniform(milliseconds(500), milliseconds(1500));
        k->per_message = DelaySpec::none();
    }
    m.boot = DelaySpec::uniform(milliseconds(5000), milliseconds(15000));
    m.fetch = DelaySpec::uniform(milliseconds(15000), milliseconds(25000));
    m.sink_connect = DelaySpec::uniform(milliseconds(500), milliseconds(1200));
    return m;
}

}  // namespace caddot::transport
