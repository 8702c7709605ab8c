#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "cavmix/core.hpp"

namespace cavmix {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Scenario files are a TOML subset: top-level keys plus the [network],
// [hv_params] and [cacc_params] tables. Speeds are km/h in the file and m/s in
// memory; times are s, lengths m, accelerations m/s^2. Missing keys keep the
// desk-scale defaults. Unknown keys and malformed values throw ConfigError.
ScenarioConfig parse_config(std::string_view text);
ScenarioConfig load_config(const std::filesystem::path& path);

std::string to_toml(const ScenarioConfig& cfg);

}  // namespace cavmix
