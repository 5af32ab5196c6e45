#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "cli.hpp"

namespace cli {

std::map<std::string, double> default_tolerances() {
  return {
      {"order_min", 0.4},             {"order_min_deterministic", 0.9}, {"zero_error", 1e-12},
      {"dissipativity_slack", 10.0},  {"certificate", 1e-8},            {"symmetry", 1e-10},
      {"lipschitz_ratio", 1.0},       {"value_rel", 0.05},              {"dpp_factor", 3.0},
      {"moment_margin", 0.1},
  };
}

double Context::tol(const std::string& name) const {
  const auto it = tolerances.find(name);
  if (it == tolerances.end()) throw sdde::Error(sdde::ErrorKind::ConfigError, "cli", "unknown tolerance " + name);
  return it->second;
}

void Context::check(const std::string& name, const std::string& module, const std::string& invariant, bool pass,
                    json detail) {
  checks.push_back({name, module, invariant, pass, std::move(detail)});
}

void Context::write_json(const std::string& file, const json& j) {
  std::ofstream os(out_dir / file);
  os << j.dump(2) << "\n";
  files.push_back(file);
}

void Context::write_csv(const std::string& file, const std::vector<std::string>& header,
                        const std::vector<std::vector<double>>& rows) {
  std::ofstream os(out_dir / file);
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << "\n" << std::setprecision(17);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << "\n";
  }
  files.push_back(file);
}

const sdde::ValueModel& Context::value_model() {
  if (!trained) {
    const auto& run = config.run;
    const auto& p = scenario.problem;
    const auto states = sdde::perturbed_states(p.model, scenario.history, run.training_states, 0.3, seed + 5);
    sdde::LsmcConfig cfg;
    cfg.horizon = run.horizon;
    cfg.decisions = run.decisions;
    cfg.paths_per_state = run.inner_paths;
    cfg.moments = run.moments;
    cfg.degree = run.basis_degree;
    cfg.seed = seed + 1;
    cfg.workers = run.workers;
    // degenerate segment features (no delay terms) leave the design rank deficient; drop moments until it is not
    for (;;) {
      try {
        trained = sdde::lsmc_value(p, states, cfg);
        break;
      } catch (const sdde::Error& e) {
        if (e.kind() != sdde::ErrorKind::RegressionSingular || cfg.moments == 0) throw;
        --cfg.moments;
      }
    }
    held_out = sdde::perturbed_states(p.model, scenario.history, 40, 0.3, seed + 99);
  }
  return *trained;
}

}  // namespace cli
