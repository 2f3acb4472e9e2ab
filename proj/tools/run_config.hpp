#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace vofde::cli {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Flat key/value settings from a JSON object, with `key=value` overrides
// applied on top. Every key must be read by the command before finish().
class RunConfig {
public:
    static RunConfig load(const std::string& path, const std::vector<std::string>& overrides);

    bool has(const std::string& key) const { return values_.contains(key); }

    double real(const std::string& key, double fallback);
    std::size_t count(const std::string& key, std::size_t fallback);
    bool flag(const std::string& key, bool fallback);
    std::string text(const std::string& key, const std::string& fallback);
    // A number or an array of numbers.
    std::vector<double> reals(const std::string& key, std::vector<double> fallback);
    std::vector<std::size_t> counts(const std::string& key, std::vector<std::size_t> fallback);
    std::vector<std::string> texts(const std::string& key, std::vector<std::string> fallback);

    // Throws ConfigError naming every key that no getter asked for.
    void finish() const;

    const nlohmann::json& values() const noexcept { return values_; }

private:
    const nlohmann::json* lookup(const std::string& key);

    nlohmann::json values_ = nlohmann::json::object();
    std::set<std::string> used_;
};

}  // namespace vofde::cli
