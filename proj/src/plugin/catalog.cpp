#include "caddot/plugin/catalog.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace caddot::plugin {

bool model_pattern_matches(const std::string& pattern, const std::string& model) {
    if (pattern.empty()) return false;
    if (pattern.back() == '*') {
        auto prefix = pattern.substr(0, pattern.size() - 1);
        return model.size() >= prefix.size() && model.compare(0, prefix.size(), prefix) == 0;
    }
    return pattern == model;
}

void Catalog::add(AdapterDescriptor d) {
    descriptors_.push_back(std::move(d));
}

const AdapterDescriptor* Catalog::by_id(const std::string& plugin_id) const {
    for (const auto& d : descriptors_) {
        if (d.plugin_id == plugin_id) return &d;
    }
    return nullptr;
}

std::variant<AdapterDescriptor, NoAdapter> Catalog::match(
    const protocol::SensorIdentity& identity) const {
    const AdapterDescriptor* best = nullptr;
    bool best_exact = false;

    auto better = [&](const AdapterDescriptor* cand, bool exact) {
        if (!best) return true;
        if (exact != best_exact) return exact;
        if (cand->version != best->version) return cand->version > best->version;
        return cand->plugin_id < best->plugin_id;
    };

    for (const auto& d : descriptors_) {
        for (const auto& m : d.matches) {
            if (m.manufacturer != identity.manufacturer) continue;
            bool exact = m.model_pattern == identity.model;
            if (!exact && !model_pattern_matches(m.model_pattern, identity.model)) continue;
            if (better(&d, exact)) {
                best = &d;
                best_exact = exact;
            }
        }
    }
    if (!best) {
        return NoAdapter{"no adapter for " + identity.manufacturer + "/" + identity.model};
    }
    return *best;
}

std::variant<AdapterDescriptor, std::string> Catalog::parse_descriptor(
    const std::string& json_text) {
    auto j = nlohmann::json::parse(json_text, nullptr, false);
    if (j.is_discarded()) return std::string("invalid JSON");
    AdapterDescriptor d;
    try {
        d.plugin_id = j.at("plugin_id").get<std::string>();
        d.dialect = j.at("dialect").get<std::string>();
        d.version = j.value("version", 1);
        d.artifact = j.value("artifact", std::string());
        for (const auto& m : j.at("matches")) {
            d.matches.push_back({m.at("manufacturer").get<std::string>(),
                                 m.at("model").get<std::string>()});
        }
    } catch (const nlohmann::json::exception& e) {
        return std::string(e.what());
    }
    if (d.plugin_id.empty() || d.matches.empty()) {
        return std::string("descriptor needs plugin_id and at least one match");
    }
    return d;
}

std::variant<Catalog, std::string> Catalog::load_dir(const std::string& dir) {
    Catalog catalog;
    std::error_code ec;
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
        if (entry.path().extension() == ".json") files.push_back(entry.path());
    }
    if (ec) return "cannot read plugin directory " + dir;
    std::sort(files.begin(), files.end());
    for (const auto& path : files) {
        std::ifstream in(path);
        std::ostringstream ss;
        ss << in.rdbuf();
        auto parsed = parse_descriptor(ss.str());
        if (auto* err = std::get_if<std::string>(&parsed)) {
            return path.filename().string() + ": " + *err;
        }
        auto& d = std::get<AdapterDescriptor>(parsed);
        if (catalog.by_id(d.plugin_id)) {
            return path.filename().string() + ": duplicate plugin_id " + d.plugin_id;
        }
        catalog.add(std::move(d));
    }
    return catalog;
}

}  // namespace caddot::plugin
