#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "tpsurv/simulation.hpp"

namespace tpsurv {

/// Validation failure with the first offending key attached.
struct ConfigError : std::runtime_error {
  ConfigError(const std::string& key_, const std::string& message)
      : std::runtime_error(message), key(key_) {}
  std::string key;
};

/// Scenario config format: `key = value` lines, `#` comments, and one
/// `[cell NAME]` section per simulation cell. Keys above the first section
/// are defaults inherited by every cell.
std::vector<ScenarioSpec> parse_scenario_config(const std::string& path);

}  // namespace tpsurv
