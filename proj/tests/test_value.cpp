#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sdde/scenarios.hpp"
#include "sdde/value.hpp"
#include "support.hpp"

using namespace sdde;
using testsupport::v1;

namespace {

double annuity(double rho, double T) { return (1.0 - std::exp(-rho * T)) / rho; }

// a0 = a1 = 0, b0 = 0, p1 = 1, additive noise, l = y.
LinearParams mean_ode_params(double sigma) {
  LinearParams p;
  p.p1 = 1.0;
  p.sigma0 = sigma;
  p.cost_state = 1.0;
  p.delta0 = 0.5;
  p.eta0 = 1.0;
  p.growth = 1.5;
  p.rho = 3.0;
  return p;
}

AdvertisingParams deterministic_ad() {
  AdvertisingParams a;
  a.sigma0 = 0.0;
  a.gamma0 = 0.0;
  a.lattice_points = 2;
  a.g = 3.0;
  a.cost_constant = 3.0;
  a.growth = 1.0;
  a.rho = 2.0;
  return a;
}

// Independent enumeration: explicit control paths through the simulator.
double explicit_cost(const Problem& p, const HistoryPair& h, const std::vector<std::size_t>& seq, double T) {
  const auto& m = p.model;
  const double dt = m.grid().spacing();
  const int steps = m.grid().steps_for(T, "test");
  const int block = steps / static_cast<int>(seq.size());
  ControlPath c{Mat(steps, 1)};
  for (int k = 0; k < steps; ++k) c.values.row(k) = m.controls()[seq[static_cast<std::size_t>(k / block)]].transpose();
  const auto traj = simulate_sdde(m, h, c, sample_brownian(0, 0, dt, T, 1), T);
  const double rho = p.cost.discount;
  double J = 0.0;
  for (int k = 0; k < steps; ++k) {
    // exact integral of e^{-rho t} times the linear interpolant of l on the cell
    const Vec u = c.values.row(k).transpose();
    const double la = p.cost.running(traj.states.row(k).transpose(), u);
    const double lb = p.cost.running(traj.states.row(k + 1).transpose(), u);
    const double t0 = k * dt, t1 = t0 + dt;
    const double e0 = std::exp(-rho * t0), e1 = std::exp(-rho * t1);
    const double I0 = (e0 - e1) / rho;
    const double I1 = (e0 * (1 + rho * t0) - e1 * (1 + rho * t1)) / (rho * rho) - t0 * I0;
    J += la * I0 + (lb - la) * I1 / dt;
  }
  return J;
}

}  // namespace

TEST_CASE("unit running cost gives the annuity exactly") {
  LinearParams p;
  p.sigma0 = 0.3;
  p.a0 = -0.2;
  p.cost_const = 1.0;
  const auto sc = linear_scenario(p);
  const auto est = evaluate_policy(sc.problem, sc.history, FeedbackPolicy::constant(1), 2.0, 50, 3);
  CHECK(est.mean == doctest::Approx(annuity(p.rho, 2.0)).epsilon(1e-13));
  CHECK(est.std_error <= 1e-15);
  CHECK(est.paths == 50);
  CHECK(est.tail_bound > 0.0);
  CHECK(std::isfinite(est.tail_bound));
}

TEST_CASE("cost shift moves the estimate by c times the annuity") {
  AdvertisingParams a;
  auto sc = advertising_scenario(a);
  const auto base = evaluate_policy(sc.problem, sc.history, FeedbackPolicy::constant(2), 2.0, 200, 8);
  Problem shifted = sc.problem;
  const auto l = sc.problem.cost.running;
  shifted.cost.running = [l](const Vec& z, const Vec& u) { return l(z, u) + 0.7; };
  const auto moved = evaluate_policy(shifted, sc.history, FeedbackPolicy::constant(2), 2.0, 200, 8);
  CHECK(moved.mean - base.mean == doctest::Approx(0.7 * annuity(a.rho, 2.0)).epsilon(1e-12));
}

TEST_CASE("mean ODE oracle within three standard errors") {
  const auto sc = linear_scenario(mean_ode_params(0.5));
  const double rho = sc.problem.cost.discount, T = 2.0, u = 0.5, d = 1.0, eta = 1.0;
  const double exact = eta * annuity(rho, T) + u * d * (1.0 - std::exp(-rho * T) * (1.0 + rho * T)) / (rho * rho);
  const auto sdde = evaluate_policy(sc.problem, sc.history, FeedbackPolicy::constant(1), T, 10000, 21);
  const auto lift = evaluate_policy(sc.problem, sc.history, FeedbackPolicy::constant(1), T, 10000, 21, Route::Lift);
  CHECK(std::abs(sdde.mean - exact) <= 3.0 * sdde.std_error);
  CHECK(std::abs(lift.mean - exact) <= 3.0 * lift.std_error);
  CHECK(std::abs(sdde.mean - lift.mean) <= 1e-3);
}

TEST_CASE("discount at or below rho0 is rejected") {
  const auto sc = advertising_scenario({});
  Problem p = sc.problem;
  p.cost.discount = p.rho0;
  CHECK_THROWS_AS(evaluate_policy(p, sc.history, FeedbackPolicy::constant(0), 1.0, 5, 1), Error);
  CHECK_THROWS_AS(evaluate_policy(sc.problem, sc.history, FeedbackPolicy::constant(9), 1.0, 5, 1), Error);
}

TEST_CASE("estimates are deterministic across worker counts") {
  const auto sc = advertising_scenario({});
  const auto a = evaluate_policy(sc.problem, sc.history, FeedbackPolicy::threshold(0, 1.0, 4, 0), 2.0, 64, 5, Route::Sdde, 1);
  const auto b = evaluate_policy(sc.problem, sc.history, FeedbackPolicy::threshold(0, 1.0, 4, 0), 2.0, 64, 5, Route::Sdde, 3);
  CHECK(a.mean == b.mean);
  CHECK(a.std_error == b.std_error);
}

TEST_CASE("brute force on hand cases") {
  {
    const auto sc = advertising_scenario(deterministic_ad());
    Problem single = sc.problem;
    single.model = SddeModel(sc.problem.model.spec(), ControlSet({v1(0.6)}, v1(0.0), v1(1.0)));
    const auto bf = brute_force_value(single, sc.history, 1.5, 6);
    const auto ev = evaluate_policy(single, sc.history, FeedbackPolicy::constant(0), 1.5, 1, 0);
    CHECK(ev.std_error == 0.0);
    CHECK(bf.value == doctest::Approx(ev.mean).epsilon(1e-12));
  }
  LinearParams sep;
  sep.cost_control = 1.0;
  sep.ulo = 0.2;
  sep.delta0 = 0.2;
  sep.lattice_points = 4;
  const auto ls = linear_scenario(sep);
  const auto bf = brute_force_value(ls.problem, ls.history, 1.0, 4);
  for (auto i : bf.sequence) CHECK(i == 0);
  CHECK(bf.value == doctest::Approx(0.04 * annuity(sep.rho, 1.0)).epsilon(1e-12));
  CHECK_THROWS_AS(brute_force_value(ls.problem, ls.history, 1.0, 3), Error);
  LinearParams big = sep;
  big.lattice_points = 40;
  CHECK_THROWS_AS(brute_force_value(linear_scenario(big).problem, ls.history, 1.0, 8), Error);
  CHECK_THROWS_AS(brute_force_value(advertising_scenario({}).problem, ls.history, 1.0, 2), Error);
}

TEST_CASE("brute force matches explicit enumeration of all 64 sequences") {
  const auto sc = advertising_scenario(deterministic_ad());
  const double T = 1.5;
  const auto bf = brute_force_value(sc.problem, sc.history, T, 6);
  double best = 1e300;
  std::vector<std::size_t> arg;
  for (int mask = 0; mask < 64; ++mask) {
    std::vector<std::size_t> seq;
    for (int b = 5; b >= 0; --b) seq.push_back(static_cast<std::size_t>((mask >> b) & 1));
    const double J = explicit_cost(sc.problem, sc.history, seq, T);
    if (J < best) {
      best = J;
      arg = seq;
    }
  }
  CHECK(bf.value == doctest::Approx(best).epsilon(1e-12));
  CHECK(bf.sequence == arg);
  // infimum property against feedback policies
  for (const auto& pol : {FeedbackPolicy::constant(0), FeedbackPolicy::constant(1), FeedbackPolicy::threshold(0, 1.0, 1, 0)}) {
    CHECK(bf.value <= evaluate_policy(sc.problem, sc.history, pol, T, 1, 0).mean + 1e-12);
  }
}

TEST_CASE("lsmc on a deterministic model is within 5% of brute force") {
  const auto sc = advertising_scenario(deterministic_ad());
  const auto bf = brute_force_value(sc.problem, sc.history, 1.5, 6);
  const auto states = perturbed_states(sc.problem.model, sc.history, 80, 0.2, 3);
  LsmcConfig cfg;
  cfg.horizon = 1.5;
  cfg.decisions = 6;
  cfg.paths_per_state = 1;
  const auto vm = lsmc_value(sc.problem, states, cfg);
  CHECK(vm.decisions() == 6);
  CHECK(vm.coefficients.back().isZero());
  const double v = vm.predict(sc.problem.model.grid(), states[0]);
  CHECK(std::abs(v - bf.value) <= 0.05 * std::abs(bf.value));
}

TEST_CASE("state independent cost gives min over u of the annuity") {
  AdvertisingParams a;
  a.cost_constant = 2.0;
  a.lattice_points = 3;
  auto sc = advertising_scenario(a);
  sc.problem.cost.running = [](const Vec&, const Vec& u) { return (u(0) - 0.5) * (u(0) - 0.5) + 0.5; };
  const auto states = perturbed_states(sc.problem.model, sc.history, 30, 0.2, 2);
  LsmcConfig cfg;
  cfg.paths_per_state = 4;
  cfg.ridge = 0.0;
  const auto vm = lsmc_value(sc.problem, states, cfg);
  const double expect = 0.5 * annuity(a.rho, cfg.horizon);
  for (const auto& x : states) CHECK(vm.predict(sc.problem.model.grid(), x) == doctest::Approx(expect).epsilon(1e-9));
  CHECK(dpp_residual(sc.problem, vm, states, 5, 3).median_abs <= 1e-10);
}

TEST_CASE("lsmc rejects bad configurations") {
  const auto sc = advertising_scenario({});
  const auto states = perturbed_states(sc.problem.model, sc.history, 5, 0.2, 2);
  LsmcConfig cfg;
  cfg.decisions = 7;
  CHECK_THROWS_AS(lsmc_value(sc.problem, states, cfg), Error);
  cfg.decisions = 8;
  cfg.ridge = -1.0;
  CHECK_THROWS_AS(lsmc_value(sc.problem, states, cfg), Error);
  cfg.ridge = 0.0;
  cfg.paths_per_state = 1;
  try {
    lsmc_value(sc.problem, states, cfg);
    FAIL("expected RegressionSingular");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::RegressionSingular);
  }
}

TEST_CASE("lsmc is deterministic across worker counts") {
  const auto sc = advertising_scenario({});
  const auto states = perturbed_states(sc.problem.model, sc.history, 40, 0.3, 5);
  LsmcConfig cfg;
  cfg.paths_per_state = 4;
  cfg.seed = 9;
  const auto a = lsmc_value(sc.problem, states, cfg);
  cfg.workers = 3;
  const auto b = lsmc_value(sc.problem, states, cfg);
  for (std::size_t k = 0; k < a.coefficients.size(); ++k) CHECK(a.coefficients[k] == b.coefficients[k]);
}

namespace {

struct Trained {
  Scenario sc;
  ValueModel vm;
  std::vector<LiftedState> held_out;
};

const Trained& trained() {
  static const Trained t = [] {
    Trained r{advertising_scenario({}), {}, {}};
    const auto states = perturbed_states(r.sc.problem.model, r.sc.history, 100, 0.3, 5);
    LsmcConfig cfg;
    cfg.seed = 1;
    r.vm = lsmc_value(r.sc.problem, states, cfg);
    r.held_out = perturbed_states(r.sc.problem.model, r.sc.history, 40, 0.3, 99);
    return r;
  }();
  return t;
}

}  // namespace

TEST_CASE("dpp residual: trained model and zero model") {
  const auto& t = trained();
  const auto res = dpp_residual(t.sc.problem, t.vm, t.held_out, 20, 77);
  CHECK(res.residuals.size() == t.held_out.size());
  CHECK(res.median_abs <= 3.0 * res.median_se);

  const auto zero = random_value_model(1, 3, 2, 8, t.vm.step, 0.0, 4);
  const auto z = dpp_residual(t.sc.problem, zero, t.held_out, 20, 77);
  CHECK(z.median_abs > 10.0 * z.median_se);
  CHECK_THROWS_AS(dpp_residual(t.sc.problem, t.vm, t.held_out, 5, 1, 8), Error);
}

TEST_CASE("hjb residual of a constant value with matching cost is zero") {
  const double c = 0.8;
  LinearParams p;
  p.sigma0 = 0.3;
  p.b0 = 0.5;
  p.cost_const = p.rho * c;
  p.cost_constant = 2.0;
  const auto sc = linear_scenario(p);
  OperatorPack pack(sc.problem.model);
  ValueModel vm = random_value_model(1, 2, 2, 1, 0.5, 0.0, 1);
  vm.coefficients[0](0) = c;
  const auto states = perturbed_states(sc.problem.model, sc.history, 10, 0.5, 3);
  const auto r = hjb_residual(sc.problem, pack, vm, states);
  for (double v : r.residuals) CHECK(std::abs(v) <= 1e-12);
}

TEST_CASE("hjb residual: trained beats untrained and shrinks with more states") {
  const auto& t = trained();
  OperatorPack pack(t.sc.problem.model);
  const auto fit = hjb_residual(t.sc.problem, pack, t.vm, t.held_out);
  const auto rnd = hjb_residual(t.sc.problem, pack, random_value_model(1, 3, 2, 8, t.vm.step, 1.0, 4), t.held_out);
  CHECK(fit.median_abs < rnd.median_abs);

  const auto few = perturbed_states(t.sc.problem.model, t.sc.history, 50, 0.3, 5);
  LsmcConfig cfg;
  cfg.seed = 1;
  cfg.degree = 1;
  const auto small = hjb_residual(t.sc.problem, pack, lsmc_value(t.sc.problem, few, cfg), t.held_out);
  const auto many = perturbed_states(t.sc.problem.model, t.sc.history, 200, 0.3, 5);
  const auto large = hjb_residual(t.sc.problem, pack, lsmc_value(t.sc.problem, many, cfg), t.held_out);
  CHECK(large.median_abs < small.median_abs);

  OperatorPack other(linear_scenario({}).problem.model);
  CHECK_THROWS_AS(hjb_residual(t.sc.problem, other, t.vm, t.held_out), Error);
}

TEST_CASE("moment bound check") {
  const auto zero = linear_scenario({});
  const auto x0 = structural_state(zero.problem.model, zero.history);
  const auto flat = moment_bound_check(zero.problem, x0, 2.0, 10, 1.0, FeedbackPolicy::constant(1), 3);
  CHECK(std::abs(flat.slope) <= 1e-12);
  CHECK(flat.ok);
  const auto twice = moment_bound_check(zero.problem, 2.0 * x0, 2.0, 10, 1.0, FeedbackPolicy::constant(1), 3);
  CHECK(twice.moments.front() == doctest::Approx(4.0 * flat.moments.front()).epsilon(1e-12));

  const auto ad = advertising_scenario({});
  const auto xa = structural_state(ad.problem.model, ad.history);
  const auto rep = moment_bound_check(ad.problem, xa, 2.0, 400, 2.0, FeedbackPolicy::constant(4), 11);
  CHECK(rep.lambda == doctest::Approx(0.5 * (ad.problem.cost.discount + ad.problem.rho0)));
  CHECK(rep.times.size() == rep.moments.size());
  CHECK(rep.slope <= rep.lambda + 0.1);
  CHECK(rep.ok);
  CHECK(rep.fitted_c > 0.0);
  for (std::size_t k = 0; k < rep.times.size(); ++k)
    CHECK(rep.moments[k] <= rep.fitted_c * (1.0 + std::pow(norm(ad.problem.model.grid(), xa), 2.0)) *
                                    std::exp(rep.lambda * rep.times[k]) * (1.0 + 1e-12));
}

TEST_CASE("fitted value function is continuous in the weak norm") {
  const auto& t = trained();
  const auto& g = t.sc.problem.model.grid();
  OperatorPack pack(t.sc.problem.model);
  CHECK(std::abs(t.vm.predict(g, t.held_out[3]) - t.vm.predict(g, t.held_out[3])) == 0.0);
  const auto rep = b_continuity_check(t.sc.problem, pack, t.vm, 300, 3.0, 4);
  CHECK(rep.distances.size() == 300);
  CHECK(rep.envelope.size() == 10);
  CHECK(rep.shrinks);
  CHECK(rep.top_is_largest);
  CHECK(rep.envelope.front() < 0.01 * rep.envelope.back());
  CHECK_THROWS_AS(b_continuity_check(t.sc.problem, pack, t.vm, 5, 3.0, 4), Error);
}
