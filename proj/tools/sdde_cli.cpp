#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "cli.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr const char* kSeedEnv = "SDDE_SEED";

using cli::json;

struct Flags {
  std::string command;
  std::string name;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> paths;
  std::optional<double> dt;
  std::optional<int> grid_k;
  std::optional<double> horizon;
  std::optional<double> mu;
  std::optional<int> workers;
  std::string out_dir = "sdde_out";
  std::vector<std::string> tolerances;
  bool list_checks = false;
};

[[noreturn]] void config_error(const std::string& msg) {
  throw sdde::Error(sdde::ErrorKind::ConfigError, "cli", msg);
}

sdde::ScenarioConfig resolve_config(const Flags& f) {
  sdde::ScenarioConfig cfg;
  if (f.command == "scenario") {
    if (f.name.empty()) config_error("scenario needs a name: advertising, time_to_build or zero");
    if (!f.config.empty()) config_error("scenario takes a name, not --config");
    cfg = sdde::default_config(f.name == "zero" ? "linear" : f.name);
  } else {
    if (!f.name.empty()) config_error("unexpected argument '" + f.name + "'");
    cfg = f.config.empty() ? sdde::default_config("advertising") : sdde::load_config(f.config);
  }
  auto& run = cfg.run;
  if (f.paths) run.paths = *f.paths;
  if (f.horizon) run.horizon = *f.horizon;
  if (f.mu) run.mu = *f.mu;
  if (f.workers) run.workers = *f.workers;
  if (f.grid_k) cfg.set_intervals(*f.grid_k);
  if (f.dt) {
    const double d = sdde::build_scenario(cfg).problem.model.grid().delay();
    const double k = d / *f.dt;
    if (!(*f.dt > 0.0) || std::abs(k - std::round(k)) > 1e-9 * k) config_error("--dt must divide the delay");
    const int K = static_cast<int>(std::lround(k));
    if (f.grid_k && *f.grid_k != K) config_error("--dt and --grid-k disagree");
    cfg.set_intervals(K);
  }
  if (run.paths < 1) config_error("--paths must be positive");
  return cfg;
}

// flag > environment > config > 0
std::pair<std::uint64_t, std::string> resolve_seed(const Flags& f, const sdde::ScenarioConfig& cfg) {
  if (f.seed) return {*f.seed, "flag"};
  if (const char* env = std::getenv(kSeedEnv); env && *env) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*end != '\0') config_error(std::string(kSeedEnv) + " is not an unsigned integer");
    return {v, "environment"};
  }
  if (cfg.run.seed) return {*cfg.run.seed, "config"};
  return {0, "default"};
}

std::map<std::string, double> parse_tolerances(const std::vector<std::string>& items, std::map<std::string, double>& all) {
  std::map<std::string, double> over;
  for (const auto& s : items) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) config_error("--tolerance expects name=value, got '" + s + "'");
    const std::string key = s.substr(0, eq);
    if (!all.count(key)) config_error("unknown tolerance '" + key + "'");
    try {
      std::size_t used = 0;
      const double v = std::stod(s.substr(eq + 1), &used);
      if (used != s.size() - eq - 1) throw std::invalid_argument(s);
      all[key] = over[key] = v;
    } catch (const std::logic_error&) {
      config_error("bad tolerance value in '" + s + "'");
    }
  }
  return over;
}

void list_checks() {
  for (const auto& [cmd, items] : cli::check_catalog()) {
    std::cout << cmd << "\n";
    for (const auto& i : items) std::cout << "  " << i << "\n";
  }
  std::cout << "scenario <name>\n  every command above on a built-in scenario\nall\n  every command above\n";
}

int run(const Flags& f) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::string> commands;
  if (f.command == "all" || f.command == "scenario") {
    commands = cli::pipeline();
  } else if (cli::find_command(f.command)) {
    commands = {f.command};
  } else {
    config_error("unknown command '" + f.command + "'");
  }

  auto cfg = resolve_config(f);
  auto sc = sdde::build_scenario(cfg);
  cli::Context c(std::move(cfg), std::move(sc));
  c.config_path = f.command == "scenario" ? "<builtin:" + f.name + ">" : (f.config.empty() ? "<default>" : f.config);
  std::tie(c.seed, c.seed_source) = resolve_seed(f, c.config);
  c.tolerances = cli::default_tolerances();
  c.overrides = parse_tolerances(f.tolerances, c.tolerances);
  c.out_dir = f.out_dir;
  std::filesystem::create_directories(c.out_dir);

  for (const auto& cmd : commands) cli::find_command(cmd)(c);

  json checks = json::array();
  json failures = json::array();
  for (const auto& ch : c.checks) {
    json j{{"name", ch.name}, {"module", ch.module}, {"invariant", ch.invariant}, {"pass", ch.pass}, {"detail", ch.detail}};
    if (!ch.pass) failures.push_back(j);
    checks.push_back(std::move(j));
    std::cout << (ch.pass ? "PASS " : "FAIL ") << ch.name << "\n";
  }
  c.write_json("summary.json", {{"command", f.command},
                                {"scenario", c.scenario.name},
                                {"seed", c.seed},
                                {"grid_intervals", c.config.intervals()},
                                {"paths", c.config.run.paths},
                                {"horizon", c.config.run.horizon},
                                {"checks", checks}});
  if (!failures.empty()) c.write_json("failures.json", {{"command", f.command}, {"failures", failures}});

  json tol = json::object();
  for (const auto& [k, v] : c.overrides) tol[k] = v;
  c.files.push_back("manifest.json");
  json files = json::array();
  for (const auto& file : c.files) files.push_back(file);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ofstream(c.out_dir / "manifest.json") << json{{"command", f.command},
                                                     {"config", c.config_path},
                                                     {"seed", c.seed},
                                                     {"seed_source", c.seed_source},
                                                     {"tolerance_overrides", tol},
                                                     {"out_dir", c.out_dir.string()},
                                                     {"version", kVersion},
                                                     {"runtime_seconds", wall},
                                                     {"files", files}}
                                                   .dump(2)
                                             << "\n";
  return failures.empty() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical checks for controlled delay equations and their Markovian lift"};
  Flags f;
  app.add_option("command", f.command,
                 "simulate | lift-check | operators | hamiltonian-check | value | dpp | hjb-residual | scenario | all");
  app.add_option("name", f.name, "scenario name: advertising, time_to_build, zero");
  app.add_option("--config", f.config, "TOML config file");
  app.add_option("--seed", f.seed, "global seed (overrides SDDE_SEED and the config)");
  app.add_option("--paths", f.paths, "Monte Carlo paths");
  app.add_option("--dt", f.dt, "time step; must divide the delay, sets the grid");
  app.add_option("--grid-k", f.grid_k, "subintervals of the delay window");
  app.add_option("--horizon", f.horizon, "simulation horizon");
  app.add_option("--mu", f.mu, "operator shift mu (default mu0 + 1)");
  app.add_option("--workers", f.workers, "threads");
  app.add_option("--out-dir", f.out_dir, "output directory")->capture_default_str();
  app.add_option("--tolerance", f.tolerances, "name=value, repeatable");
  app.add_flag("--list-checks", f.list_checks, "print the checks behind each command");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  if (f.list_checks) {
    list_checks();
    return 0;
  }
  if (f.command.empty()) {
    std::cerr << app.help();
    return 1;
  }
  try {
    return run(f);
  } catch (const sdde::Error& e) {
    std::cerr << json{{"error", sdde::to_string(e.kind())}, {"module", e.module()}, {"message", e.what()}}.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "runtime"}, {"message", e.what()}}.dump() << "\n";
    return 1;
  }
}
