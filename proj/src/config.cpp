#include "sdde/config.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include <toml.hpp>

namespace sdde {

namespace {

constexpr const char* kModule = "config";

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw Error(ErrorKind::ConfigError, kModule, path + ": " + msg);
}

// Binds keys of one table to fields; anything not bound is a schema error.
class Table {
 public:
  Table(const toml::table* t, std::string name) : t_(t), name_(std::move(name)) {}

  Table& num(const std::string& key, double& out) {
    seen_.push_back(key);
    if (const auto* n = node(key)) {
      if (auto v = n->value_exact<double>()) {
        out = *v;
      } else if (auto i = n->value_exact<std::int64_t>()) {
        out = static_cast<double>(*i);
      } else {
        fail(path(key), "expected a number");
      }
    }
    return *this;
  }

  Table& integer(const std::string& key, int& out) {
    seen_.push_back(key);
    if (const auto* n = node(key)) {
      auto i = n->value_exact<std::int64_t>();
      if (!i) fail(path(key), "expected an integer");
      out = static_cast<int>(*i);
    }
    return *this;
  }

  Table& opt_num(const std::string& key, std::optional<double>& out) {
    double v = 0.0;
    if (node(key)) {
      num(key, v);
      out = v;
    } else {
      seen_.push_back(key);
    }
    return *this;
  }

  Table& opt_seed(const std::string& key, std::optional<std::uint64_t>& out) {
    seen_.push_back(key);
    if (const auto* n = node(key)) {
      auto i = n->value_exact<std::int64_t>();
      if (!i || *i < 0) fail(path(key), "expected a non-negative integer");
      out = static_cast<std::uint64_t>(*i);
    }
    return *this;
  }

  Table& skip(const std::string& key) {
    seen_.push_back(key);
    return *this;
  }

  void done() const {
    if (!t_) return;
    for (const auto& [k, v] : *t_) {
      const std::string key(k.str());
      bool known = false;
      for (const auto& s : seen_) known = known || s == key;
      if (!known) fail(path(key), "unknown key");
    }
  }

 private:
  const toml::node* node(const std::string& key) const { return t_ ? t_->get(key) : nullptr; }
  std::string path(const std::string& key) const { return name_ + "." + key; }

  const toml::table* t_;
  std::string name_;
  std::vector<std::string> seen_;
};

const toml::table* section(const toml::table& root, const std::string& name) {
  const auto* n = root.get(name);
  if (!n) return nullptr;
  const auto* t = n->as_table();
  if (!t) fail(name, "expected a table");
  return t;
}

void bind_run(Table& s, RunSettings& r) {
  s.opt_seed("seed", r.seed)
      .integer("paths", r.paths)
      .num("horizon", r.horizon)
      .integer("decisions", r.decisions)
      .integer("basis_degree", r.basis_degree)
      .integer("moments", r.moments)
      .integer("training_states", r.training_states)
      .integer("inner_paths", r.inner_paths)
      .integer("workers", r.workers);
}

struct Sections {
  Table scenario, model, grid, control, cost;
};

void bind(Sections& s, AdvertisingParams& p) {
  s.scenario.num("eta0", p.eta0).num("delta0", p.delta0);
  s.model.num("delay", p.delay).num("a0", p.a0).num("b0", p.b0).num("a1", p.a1).num("p1_mass", p.p1_mass);
  s.model.num("sigma0", p.sigma0).num("gamma0", p.gamma0).num("lipschitz", p.lipschitz).num("growth", p.growth);
  s.grid.integer("intervals", p.intervals);
  s.control.num("upper", p.ubar).integer("points", p.lattice_points);
  s.cost.num("rho", p.rho).num("h", p.h).num("g", p.g);
  s.cost.num("growth_constant", p.cost_constant).num("exponent", p.cost_exponent);
}

void bind(Sections& s, TimeToBuildParams& p) {
  s.scenario.num("eta0", p.eta0).num("delta0", p.delta0);
  s.model.num("delay", p.delay).num("b0", p.b0).num("p1", p.p1).num("s0", p.s0).num("s1", p.s1);
  s.model.num("lipschitz", p.lipschitz).num("growth", p.growth);
  s.grid.integer("intervals", p.intervals);
  s.control.num("upper", p.ubar).integer("points", p.lattice_points);
  s.cost.num("rho", p.rho).num("c", p.c).num("f", p.f);
  s.cost.num("growth_constant", p.cost_constant).num("exponent", p.cost_exponent);
}

void bind(Sections& s, LinearParams& p) {
  s.scenario.num("eta0", p.eta0).num("delta0", p.delta0);
  s.model.num("delay", p.delay).num("a0", p.a0).num("b0", p.b0).num("a1", p.a1).num("p1", p.p1);
  s.model.num("sigma0", p.sigma0).num("gamma0", p.gamma0).num("lipschitz", p.lipschitz).num("growth", p.growth);
  s.grid.integer("intervals", p.intervals);
  s.control.num("lower", p.ulo).num("upper", p.uhi).integer("points", p.lattice_points);
  s.cost.num("rho", p.rho).num("state", p.cost_state).num("control", p.cost_control).num("constant", p.cost_const);
  s.cost.num("growth_constant", p.cost_constant).num("exponent", p.cost_exponent);
}

}  // namespace

std::string ScenarioConfig::kind() const {
  switch (params.index()) {
    case 0: return "advertising";
    case 1: return "time_to_build";
    default: return "linear";
  }
}

int ScenarioConfig::intervals() const {
  return std::visit([](const auto& p) { return p.intervals; }, params);
}

void ScenarioConfig::set_intervals(int k) {
  std::visit([k](auto& p) { p.intervals = k; }, params);
}

ScenarioConfig default_config(const std::string& kind) {
  ScenarioConfig c;
  c.origin = "<default>";
  if (kind == "advertising") {
    c.params = AdvertisingParams{};
  } else if (kind == "time_to_build") {
    c.params = TimeToBuildParams{};
  } else if (kind == "linear") {
    c.params = LinearParams{};
  } else {
    fail("scenario.kind", "unknown kind '" + kind + "'");
  }
  return c;
}

ScenarioConfig parse_config(std::string_view text, const std::string& origin) {
  toml::table root;
  try {
    root = toml::parse(text, origin);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << e.description() << " at line " << e.source().begin.line;
    fail(origin, os.str());
  }
  for (const auto& [k, v] : root) {
    const std::string key(k.str());
    if (key != "scenario" && key != "model" && key != "grid" && key != "control" && key != "cost") {
      fail(key, "unknown section");
    }
  }
  const auto* sc = section(root, "scenario");
  std::string kind = "advertising";
  if (sc) {
    if (const auto* n = sc->get("kind")) {
      auto v = n->value_exact<std::string>();
      if (!v) fail("scenario.kind", "expected a string");
      kind = *v;
    }
  }
  ScenarioConfig c = default_config(kind);
  c.origin = origin;
  Sections s{Table(sc, "scenario"), Table(section(root, "model"), "model"), Table(section(root, "grid"), "grid"),
             Table(section(root, "control"), "control"), Table(section(root, "cost"), "cost")};
  s.scenario.skip("kind");
  bind_run(s.scenario, c.run);
  s.model.opt_num("mu", c.run.mu);
  std::visit([&](auto& p) { bind(s, p); }, c.params);
  s.scenario.done();
  s.model.done();
  s.grid.done();
  s.control.done();
  s.cost.done();
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open");
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str(), path);
}

Scenario build_scenario(const ScenarioConfig& config) {
  return std::visit(
      [](const auto& p) -> Scenario {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, AdvertisingParams>) return advertising_scenario(p);
        else if constexpr (std::is_same_v<P, TimeToBuildParams>) return time_to_build_scenario(p);
        else return linear_scenario(p);
      },
      config.params);
}

}  // namespace sdde
