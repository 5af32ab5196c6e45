#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdde/config.hpp"
#include "sdde/value.hpp"

namespace cli {

using json = nlohmann::ordered_json;

struct Check {
  std::string name;
  std::string module;
  std::string invariant;
  bool pass = false;
  json detail;
};

struct Context {
  Context(sdde::ScenarioConfig cfg, sdde::Scenario sc) : config(std::move(cfg)), scenario(std::move(sc)) {}

  sdde::ScenarioConfig config;
  sdde::Scenario scenario;
  std::string config_path;
  std::uint64_t seed = 0;
  std::string seed_source;
  std::filesystem::path out_dir;
  std::map<std::string, double> tolerances;
  std::map<std::string, double> overrides;
  std::vector<std::string> files;
  std::vector<Check> checks;

  // trained once per run and shared by value, dpp and hjb-residual
  std::optional<sdde::ValueModel> trained;
  std::vector<sdde::LiftedState> held_out;

  double tol(const std::string& name) const;
  void check(const std::string& name, const std::string& module, const std::string& invariant, bool pass,
             json detail = json::object());
  void write_json(const std::string& file, const json& j);
  // rows already formatted; cells joined by commas
  void write_csv(const std::string& file, const std::vector<std::string>& header,
                 const std::vector<std::vector<double>>& rows);
  const sdde::ValueModel& value_model();
};

std::map<std::string, double> default_tolerances();

// One entry per command: the checks it runs.
std::vector<std::pair<std::string, std::vector<std::string>>> check_catalog();

using Command = void (*)(Context&);
Command find_command(const std::string& name);
const std::vector<std::string>& pipeline();

}  // namespace cli
