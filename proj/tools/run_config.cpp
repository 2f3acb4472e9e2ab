#include "run_config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace vofde::cli {

using nlohmann::json;

namespace {

std::size_t as_count(const std::string& key, const json& v) {
    if (v.is_number_unsigned()) {
        return v.get<std::size_t>();
    }
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (d >= 0.0 && std::floor(d) == d && d < 1e15) {
            return static_cast<std::size_t>(d);
        }
    }
    throw ConfigError(fmt::format("config key '{}': expected a non-negative integer, got {}", key,
                                  v.dump()));
}

double as_real(const std::string& key, const json& v) {
    if (!v.is_number()) {
        throw ConfigError(fmt::format("config key '{}': expected a number, got {}", key, v.dump()));
    }
    return v.get<double>();
}

std::string as_text(const std::string& key, const json& v) {
    if (!v.is_string()) {
        throw ConfigError(fmt::format("config key '{}': expected a string, got {}", key, v.dump()));
    }
    return v.get<std::string>();
}

}  // namespace

RunConfig RunConfig::load(const std::string& path, const std::vector<std::string>& overrides) {
    RunConfig cfg;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) {
            throw ConfigError(fmt::format("cannot read config file '{}'", path));
        }
        std::stringstream buf;
        buf << in.rdbuf();
        try {
            cfg.values_ = json::parse(buf.str());
        } catch (const json::parse_error& e) {
            throw ConfigError(fmt::format("config file '{}' is not valid JSON: {}", path, e.what()));
        }
        if (!cfg.values_.is_object()) {
            throw ConfigError(fmt::format("config file '{}' must hold a JSON object", path));
        }
    }
    for (const std::string& item : overrides) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw ConfigError(fmt::format("override '{}' is not of the form key=value", item));
        }
        const std::string key = item.substr(0, eq);
        const std::string text = item.substr(eq + 1);
        json value = json::parse(text, nullptr, false);
        cfg.values_[key] = value.is_discarded() ? json(text) : value;
    }
    for (const auto& [key, value] : cfg.values_.items()) {
        if (value.is_object()) {
            throw ConfigError(fmt::format("config key '{}': nested objects are not allowed", key));
        }
    }
    return cfg;
}

const json* RunConfig::lookup(const std::string& key) {
    used_.insert(key);
    const auto it = values_.find(key);
    return it == values_.end() ? nullptr : &*it;
}

double RunConfig::real(const std::string& key, double fallback) {
    const json* v = lookup(key);
    return v == nullptr ? fallback : as_real(key, *v);
}

std::size_t RunConfig::count(const std::string& key, std::size_t fallback) {
    const json* v = lookup(key);
    return v == nullptr ? fallback : as_count(key, *v);
}

bool RunConfig::flag(const std::string& key, bool fallback) {
    const json* v = lookup(key);
    if (v == nullptr) {
        return fallback;
    }
    if (!v->is_boolean()) {
        throw ConfigError(fmt::format("config key '{}': expected true or false, got {}", key,
                                      v->dump()));
    }
    return v->get<bool>();
}

std::string RunConfig::text(const std::string& key, const std::string& fallback) {
    const json* v = lookup(key);
    return v == nullptr ? fallback : as_text(key, *v);
}

std::vector<double> RunConfig::reals(const std::string& key, std::vector<double> fallback) {
    const json* v = lookup(key);
    if (v == nullptr) {
        return fallback;
    }
    if (!v->is_array()) {
        return {as_real(key, *v)};
    }
    std::vector<double> out;
    for (const auto& e : *v) {
        out.push_back(as_real(key, e));
    }
    return out;
}

std::vector<std::size_t> RunConfig::counts(const std::string& key,
                                           std::vector<std::size_t> fallback) {
    const json* v = lookup(key);
    if (v == nullptr) {
        return fallback;
    }
    if (!v->is_array()) {
        return {as_count(key, *v)};
    }
    std::vector<std::size_t> out;
    for (const auto& e : *v) {
        out.push_back(as_count(key, e));
    }
    return out;
}

std::vector<std::string> RunConfig::texts(const std::string& key,
                                          std::vector<std::string> fallback) {
    const json* v = lookup(key);
    if (v == nullptr) {
        return fallback;
    }
    if (!v->is_array()) {
        return {as_text(key, *v)};
    }
    std::vector<std::string> out;
    for (const auto& e : *v) {
        out.push_back(as_text(key, e));
    }
    return out;
}

void RunConfig::finish() const {
    std::string unknown;
    for (const auto& [key, value] : values_.items()) {
        if (!used_.contains(key)) {
            unknown += unknown.empty() ? key : ", " + key;
        }
    }
    if (!unknown.empty()) {
        throw ConfigError(fmt::format("unknown config key(s): {}", unknown));
    }
}

}  // namespace vofde::cli
