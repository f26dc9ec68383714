#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "caddot/protocol/types.hpp"

namespace caddot::plugin {

// Descriptor of one adapter: which (manufacturer, model) sensors it serves
// and which dialect implementation it binds to. `artifact`, when set, names a
// loadable file in the plugin directory; otherwise the dialect must be
// built in.
struct AdapterDescriptor {
    struct Match {
        std::string manufacturer;
        std::string model_pattern;  // exact, or a single trailing '*'

        bool operator==(const Match&) const = default;
    };

    std::string plugin_id;
    std::vector<Match> matches;
    std::string dialect;
    int version = 1;
    std::string artifact;

    bool operator==(const AdapterDescriptor&) const = default;
};

struct NoAdapter {
    std::string detail;
};

bool model_pattern_matches(const std::string& pattern, const std::string& model);

// ── Catalog ──────────────────────────────────────────────────────────────────
//
// Read-mostly index of adapter descriptors. Matching prefers an exact
// (manufacturer, model) entry over a wildcard one; ties break by highest
// version, then lexicographic plugin id.

class Catalog {
public:
    void add(AdapterDescriptor d);

    const AdapterDescriptor* by_id(const std::string& plugin_id) const;

    std::variant<AdapterDescriptor, NoAdapter> match(
        const protocol::SensorIdentity& identity) const;

    std::size_t size() const { return descriptors_.size(); }
    const std::vector<AdapterDescriptor>& all() const { return descriptors_; }

    // Loads every *.json descriptor in a directory.
    static std::variant<Catalog, std::string> load_dir(const std::string& dir);
    static std::variant<AdapterDescriptor, std::string> parse_descriptor(
        const std::string& json_text);

private:
    std::vector<AdapterDescriptor> descriptors_;
};

}  // namespace caddot::plugin
