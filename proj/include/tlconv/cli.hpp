#pragma once

#include <json.hpp>

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace tlconv {

/// Bad configuration: unknown keys, wrong types or invalid values.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Typed access to a JSON object that remembers which keys were read, so
/// leftovers can be rejected by finish().
class ConfigReader {
public:
    explicit ConfigReader(nlohmann::json j, std::string scope = "");

    template <class T>
    T get(const std::string& key, T fallback) {
        seen_.insert(key);
        if (!j_.contains(key)) return fallback;
        try {
            return j_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError("config key '" + scope_ + key + "' has the wrong type");
        }
    }

    bool has(const std::string& key) const { return j_.contains(key); }
    /// Nested object reader; an absent key gives an empty object.
    ConfigReader child(const std::string& key);
    /// Throws ConfigError naming the first key that was never read.
    void finish() const;

private:
    nlohmann::json j_;
    std::string scope_;
    std::set<std::string> seen_;
};

/// Exit codes of the command-line tool.
enum ExitCode { kExitOk = 0, kExitCheckFailed = 1, kExitUsage = 2 };

/// Entry point shared by the tool and the tests.
int run_cli(int argc, char** argv);

/// Names of the subcommands, in help order.
const std::vector<std::string>& cli_commands();

}  // namespace tlconv
