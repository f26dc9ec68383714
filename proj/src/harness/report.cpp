#include "caddot/harness/report.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace caddot::harness {

using configurator::SessionStatus;
using configurator::SessionTrace;
using configurator::Step;

namespace {

std::string fmt3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

}  // namespace

StepStat Report::stat(const std::string& transport, Step step) const {
    auto it = stats.find(transport);
    if (it == stats.end()) return {};
    return it->second[static_cast<std::size_t>(static_cast<int>(step) - 1)];
}

int Report::total_configured() const {
    int n = 0;
    for (const auto& [t, o] : outcomes) n += o.configured;
    return n;
}

int Report::total_failed() const {
    int n = 0;
    for (const auto& [t, o] : outcomes) n += o.failed;
    return n;
}

bool Report::all_audits_pass() const {
    return std::all_of(audits.begin(), audits.end(),
                       [](const AuditResult& a) { return a.pass; });
}

Report build_report(std::string experiment, bool deterministic,
                    std::vector<std::string> transports, std::vector<SessionTrace> traces,
                    std::vector<AuditResult> audits, long sink_rejects) {
    Report report;
    report.experiment = std::move(experiment);
    report.deterministic = deterministic;
    report.transports = std::move(transports);
    report.audits = std::move(audits);
    report.sink_rejects = sink_rejects;
    report.auth_clean = sink_rejects == 0;

    std::sort(traces.begin(), traces.end(), [](const SessionTrace& a, const SessionTrace& b) {
        if (a.transport != b.transport) return a.transport < b.transport;
        return a.sensor_id < b.sensor_id;
    });

    struct Acc {
        int n = 0;
        double sum = 0, lo = 0, hi = 0;
    };
    std::map<std::string, std::array<Acc, 10>> accs;

    for (const auto& t : traces) {
        auto& outcome = report.outcomes[t.transport];
        if (t.status == SessionStatus::configured) {
            outcome.configured++;
        } else {
            outcome.failed++;
        }
        for (const auto& span : t.steps) {
            if (span.outcome != "ok") continue;
            auto idx = static_cast<std::size_t>(static_cast<int>(span.step) - 1);
            auto& acc = accs[t.transport][idx];
            double secs = static_cast<double>((span.end - span.start).count()) / 1000.0;
            if (acc.n == 0) {
                acc.lo = acc.hi = secs;
            } else {
                acc.lo = std::min(acc.lo, secs);
                acc.hi = std::max(acc.hi, secs);
            }
            acc.sum += secs;
            acc.n++;
        }
    }
    for (const auto& [transport, arr] : accs) {
        auto& stats = report.stats[transport];
        for (std::size_t i = 0; i < 10; ++i) {
            const auto& acc = arr[i];
            if (acc.n > 0) {
                stats[i] = {acc.n, acc.sum / acc.n, acc.lo, acc.hi};
            }
        }
    }
    report.traces = std::move(traces);
    return report;
}

std::string traces_csv(const Report& report) {
    std::ostringstream out;
    out << "sensor_id,transport,step,step_name,outcome,start_ms,end_ms,duration_ms\n";
    for (const auto& t : report.traces) {
        for (const auto& span : t.steps) {
            auto start = report.deterministic ? 0 : span.start.ms;
            auto end = report.deterministic ? 0 : span.end.ms;
            out << t.sensor_id << ',' << t.transport << ','
                << static_cast<int>(span.step) << ',' << step_name(span.step) << ','
                << span.outcome << ',' << start << ',' << end << ','
                << (span.end - span.start).count() << '\n';
        }
    }
    return out.str();
}

std::string report_csv(const Report& report) {
    std::ostringstream out;
    out << "transport,step,step_name,samples,mean_s,min_s,max_s\n";
    for (const auto& transport : report.transports) {
        for (int s = 1; s <= 10; ++s) {
            auto stat = report.stat(transport, static_cast<Step>(s));
            out << transport << ',' << s << ',' << step_name(static_cast<Step>(s)) << ','
                << stat.samples << ',' << fmt3(stat.mean_s) << ',' << fmt3(stat.min_s) << ','
                << fmt3(stat.max_s) << '\n';
        }
    }
    return out.str();
}

std::string table_text(const Report& report) {
    std::ostringstream out;
    out << report.experiment << ": mean seconds per step\n";
    out << "step  name       ";
    for (const auto& t : report.transports) {
        out << ' ' << t;
        for (std::size_t i = t.size(); i < 8; ++i) out << ' ';
    }
    out << '\n';
    for (int s = 1; s <= 10; ++s) {
        char head[24];
        std::snprintf(head, sizeof(head), "%4d  %-10s ", s,
                      std::string(step_name(static_cast<Step>(s))).c_str());
        out << head;
        for (const auto& t : report.transports) {
            auto v = fmt3(report.stat(t, static_cast<Step>(s)).mean_s);
            out << ' ' << v;
            for (std::size_t i = v.size(); i < 8; ++i) out << ' ';
        }
        out << '\n';
    }
    out << "configured:";
    for (const auto& t : report.transports) {
        auto it = report.outcomes.find(t);
        int c = it == report.outcomes.end() ? 0 : it->second.configured;
        int f = it == report.outcomes.end() ? 0 : it->second.failed;
        out << ' ' << t << '=' << c << "/" << (c + f);
    }
    out << "\naudits: ";
    int pass = 0;
    for (const auto& a : report.audits) pass += a.pass ? 1 : 0;
    out << pass << '/' << report.audits.size() << " pass, sink rejects "
        << report.sink_rejects << '\n';
    return out.str();
}

std::string report_json(const Report& report) {
    nlohmann::json j;
    j["experiment"] = report.experiment;
    j["deterministic"] = report.deterministic;
    j["transports"] = report.transports;
    j["sink_rejects"] = report.sink_rejects;
    j["auth_clean"] = report.auth_clean;

    auto& stats = j["stats"];
    for (const auto& t : report.transports) {
        for (int s = 1; s <= 10; ++s) {
            auto stat = report.stat(t, static_cast<Step>(s));
            stats[t][std::string(step_name(static_cast<Step>(s)))] = {
                {"samples", stat.samples},
                {"mean_s", stat.mean_s},
                {"min_s", stat.min_s},
                {"max_s", stat.max_s},
            };
        }
        auto it = report.outcomes.find(t);
        j["outcomes"][t] = {
            {"configured", it == report.outcomes.end() ? 0 : it->second.configured},
            {"failed", it == report.outcomes.end() ? 0 : it->second.failed},
        };
    }

    auto& traces = j["traces"];
    traces = nlohmann::json::array();
    for (const auto& t : report.traces) {
        nlohmann::json jt;
        jt["sensor_id"] = t.sensor_id;
        jt["transport"] = t.transport;
        jt["status"] =
            t.status == SessionStatus::configured ? "CONFIGURED" : "FAILED";
        if (t.status == SessionStatus::failed) {
            jt["failed_step"] = t.failed_step;
            jt["reason"] = t.fail_reason;
        }
        auto& steps = jt["steps"];
        steps = nlohmann::json::array();
        for (const auto& span : t.steps) {
            steps.push_back({
                {"step", static_cast<int>(span.step)},
                {"name", std::string(step_name(span.step))},
                {"outcome", span.outcome},
                {"start_ms", report.deterministic ? 0 : span.start.ms},
                {"end_ms", report.deterministic ? 0 : span.end.ms},
                {"duration_ms", (span.end - span.start).count()},
            });
        }
        auto& subs = jt["subspans"];
        subs = nlohmann::json::array();
        for (const auto& sub : t.subspans) {
            subs.push_back({
                {"name", sub.name},
                {"duration_ms", (sub.end - sub.start).count()},
            });
        }
        traces.push_back(std::move(jt));
    }

    auto& audits = j["audits"];
    audits = nlohmann::json::array();
    for (const auto& a : report.audits) {
        audits.push_back({
            {"sensor_id", a.sensor_id},
            {"transport", a.transport},
            {"expected_readings", a.expected_readings},
            {"actual_readings", a.actual_readings},
            {"expected_batches", a.expected_batches},
            {"actual_batches", a.actual_batches},
            {"pass", a.pass},
            {"strategy", a.strategy_line},
            {"phenomena", a.phenomena},
            {"direct_at_ms", a.direct_at_ms},
            {"window_s", a.window_s},
            {"epoch_weekday", a.epoch_weekday},
            {"epoch_minute", a.epoch_minute},
        });
    }
    return j.dump(2) + "\n";
}

void write_report_files(const Report& report, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::ofstream(out_dir + "/traces.csv") << traces_csv(report);
    std::ofstream(out_dir + "/report.csv") << report_csv(report);
    std::ofstream(out_dir + "/table.txt") << table_text(report);
    std::ofstream(out_dir + "/report.json") << report_json(report);
}

}  // namespace caddot::harness
