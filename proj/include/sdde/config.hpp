#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "sdde/scenarios.hpp"

namespace sdde {

// Diagnostic settings from the [scenario] table.
struct RunSettings {
  std::optional<std::uint64_t> seed;
  int paths = 1000;
  double horizon = 2.0;
  int decisions = 8;
  int basis_degree = 2;
  int moments = 3;
  int training_states = 100;
  int inner_paths = 20;
  int workers = 1;
  std::optional<double> mu;  // operator shift; unset means mu0 + 1
};

struct ScenarioConfig {
  std::string origin;  // file path or "<string>"
  std::variant<AdvertisingParams, TimeToBuildParams, LinearParams> params;
  RunSettings run;

  std::string kind() const;
  int intervals() const;
  void set_intervals(int k);
};

// TOML with tables [scenario], [model], [grid], [control], [cost]. Unknown keys,
// wrong types and unknown kinds throw ConfigError naming the key path.
ScenarioConfig parse_config(std::string_view text, const std::string& origin = "<string>");
ScenarioConfig load_config(const std::string& path);

// Built-in defaults for a kind: advertising, time_to_build, linear.
ScenarioConfig default_config(const std::string& kind);

Scenario build_scenario(const ScenarioConfig& config);

}  // namespace sdde
