#include "sdde/scenarios.hpp"

#include <cmath>
#include <string>

namespace sdde {

namespace {

constexpr const char* kModule = "scenarios";

void require_sign(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::SignConstraintViolated, kModule, what);
}

Mat scalar(double v) { return Mat::Constant(1, 1, v); }

KernelFn constant_kernel(double c) {
  if (c == 0.0) return {};
  return [c](double) { return scalar(c); };
}

ModelSpec scalar_spec(double delay, int intervals, double a0, double b0, KernelFn a1, KernelFn p1, double s0,
                      double s1, double lipschitz, double growth) {
  ModelSpec s;
  s.delay = delay;
  s.intervals = intervals;
  s.linear = LinearDynamics{scalar(a0), [b0](const Vec& u) { return Vec(b0 * u); },
                            [s0, s1](const Vec& u) { return scalar(s0 + s1 * u(0)); }};
  s.state_kernel = std::move(a1);
  s.control_kernel = std::move(p1);
  s.lipschitz = lipschitz;
  s.growth = growth;
  return s;
}

CostSpec make_cost(std::function<double(const Vec&, const Vec&)> l, double K, double m, double rho) {
  CostSpec c;
  c.running = std::move(l);
  c.growth_constant = K;
  c.exponent = m;
  c.discount = rho;
  return c;
}

Vec v1(double x) { return Vec::Constant(1, x); }

}  // namespace

Problem advertising_model(const AdvertisingParams& a) {
  require_sign(a.a0 <= 0.0, "a0 must be <= 0");
  require_sign(a.b0 >= 0.0, "b0 must be >= 0");
  require_sign(a.a1 <= 0.0, "a1 must be <= 0");
  require_sign(a.p1_mass >= 0.0, "p1 must be >= 0");
  require_sign(a.sigma0 >= 0.0, "sigma0 must be >= 0");
  require_sign(a.gamma0 >= 0.0, "gamma0 must be >= 0");
  require_sign(a.ubar > 0.0, "ubar must be > 0");
  require_sign(a.h >= 0.0, "h must be convex (coefficient >= 0)");
  const double d = a.delay;
  const double peak = 2.0 * a.p1_mass / d;
  KernelFn p1;
  if (a.p1_mass != 0.0) {
    p1 = [d, peak](double xi) { return scalar(std::max(0.0, peak * (1.0 - std::abs(2.0 * xi + d) / d))); };
  }
  ModelConfig cfg;
  cfg.model = scalar_spec(d, a.intervals, a.a0, a.b0, constant_kernel(a.a1), std::move(p1), a.sigma0, a.gamma0,
                          a.lipschitz, a.growth);
  const double h = a.h, g = a.g;
  cfg.cost = make_cost([h, g](const Vec& z, const Vec& u) { return h * u.squaredNorm() - g * z(0); }, a.cost_constant,
                       a.cost_exponent, a.rho);
  cfg.controls = ControlSet::box(v1(0.0), v1(a.ubar), a.lattice_points);
  return validated_problem(cfg);
}

Problem time_to_build_model(const TimeToBuildParams& t) {
  require_sign(t.b0 >= 0.0, "b0 must be >= 0");
  require_sign(t.p1 >= 0.0, "p1 must be >= 0");
  require_sign(t.s0 >= 0.0 && t.s0 + t.s1 * t.ubar >= 0.0, "sigma0 must be >= 0 on U");
  require_sign(t.ubar > 0.0, "ubar must be > 0");
  require_sign(t.c >= 0.0, "investment cost must be convex (c >= 0)");
  ModelConfig cfg;
  cfg.model = scalar_spec(t.delay, t.intervals, 0.0, t.b0, {}, constant_kernel(t.p1), t.s0, t.s1, t.lipschitz,
                          t.growth);
  const double c = t.c, f = t.f;
  cfg.cost = make_cost([c, f](const Vec& z, const Vec& u) { return c * u.squaredNorm() - f * z(0); }, t.cost_constant,
                       t.cost_exponent, t.rho);
  cfg.controls = ControlSet::box(v1(0.0), v1(t.ubar), t.lattice_points);
  return validated_problem(cfg);
}

Problem linear_model(const LinearParams& p) {
  ModelConfig cfg;
  cfg.model = scalar_spec(p.delay, p.intervals, p.a0, p.b0, constant_kernel(p.a1), constant_kernel(p.p1), p.sigma0,
                          p.gamma0, p.lipschitz, p.growth);
  const double cs = p.cost_state, cu = p.cost_control, c0 = p.cost_const;
  cfg.cost = make_cost([cs, cu, c0](const Vec& z, const Vec& u) { return cs * z(0) + cu * u.squaredNorm() + c0; },
                       p.cost_constant, p.cost_exponent, p.rho);
  cfg.controls = ControlSet::box(v1(p.ulo), v1(p.uhi), p.lattice_points);
  return validated_problem(cfg);
}

Scenario advertising_scenario(const AdvertisingParams& params) {
  Problem p = advertising_model(params);
  HistoryPair h = constant_history(p.model, v1(params.eta0), v1(params.eta0), v1(params.delta0));
  return {"advertising", std::move(p), std::move(h)};
}

Scenario time_to_build_scenario(const TimeToBuildParams& params) {
  Problem p = time_to_build_model(params);
  HistoryPair h = constant_history(p.model, v1(params.eta0), v1(params.eta0), v1(params.delta0));
  return {"time_to_build", std::move(p), std::move(h)};
}

Scenario linear_scenario(const LinearParams& params) {
  Problem p = linear_model(params);
  HistoryPair h = constant_history(p.model, v1(params.eta0), v1(params.eta0), v1(params.delta0));
  return {"linear", std::move(p), std::move(h)};
}

}  // namespace sdde
