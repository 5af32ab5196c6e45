#include <algorithm>
#include <cmath>
#include <numbers>

#include "cli.hpp"
#include "sdde/hamiltonian.hpp"
#include "sdde/operators.hpp"

namespace cli {

namespace {

using namespace sdde;

std::size_t middle_index(const SddeModel& m) { return m.controls().size() / 2; }

bool deterministic(const SddeModel& m) {
  for (const Vec& u : m.controls().points())
    if (m.control_diffusion(u).cwiseAbs().maxCoeff() != 0.0) return false;
  return true;
}

json to_json(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(x);
  return a;
}

void simulate(Context& c) {
  const auto& m = c.scenario.problem.model;
  const double T = c.config.run.horizon;
  const int paths = c.config.run.paths;
  const double dt = m.grid().spacing();
  const int steps = m.grid().steps_for(T, "cli");
  const Vec u = m.controls()[middle_index(m)];
  ControlPath ctl{Mat(steps, m.p())};
  for (int k = 0; k < steps; ++k) ctl.values.row(k) = u.transpose();
  std::vector<Trajectory> runs(static_cast<std::size_t>(paths));
  for_each_index(runs.size(), c.config.run.workers, [&](std::size_t i) {
    runs[i] = simulate_sdde(m, c.scenario.history, ctl, sample_brownian(c.seed, i, dt, T, m.q()), T);
  });
  std::vector<std::vector<double>> rows;
  bool finite = true;
  for (int k = 0; k <= steps; ++k) {
    double s = 0.0, s2 = 0.0;
    for (const auto& r : runs) {
      const double y = r.states(k, 0);
      finite = finite && std::isfinite(y);
      s += y;
      s2 += y * y;
    }
    const double mean = s / paths;
    const double var = paths > 1 ? std::max(0.0, (s2 - paths * mean * mean) / (paths - 1)) : 0.0;
    rows.push_back({runs.front().time[static_cast<std::size_t>(k)], mean, std::sqrt(var)});
  }
  c.write_csv("simulate_mean.csv", {"t", "mean_y0", "std_y0"}, rows);
  std::vector<std::vector<double>> path0;
  for (int k = 0; k <= steps; ++k) path0.push_back({runs.front().time[static_cast<std::size_t>(k)], runs.front().states(k, 0)});
  c.write_csv("simulate_path0.csv", {"t", "y0"}, path0);
  c.check("simulate.finite", "sdde_sim", "all simulated states are finite", finite,
          {{"paths", paths}, {"horizon", T}, {"control_index", middle_index(m)}, {"mean_y0_T", rows.back()[1]}});
}

void lift_check(Context& c) {
  const auto& m = c.scenario.problem.model;
  const auto& h = c.scenario.history;
  const double d = m.grid().delay();
  const Vec lo = m.controls().lower(), hi = m.controls().upper();
  EquivalenceInput in;
  in.eta0 = h.eta0;
  in.eta1 = [&h](double) -> Vec { return h.eta1.row(h.eta1.rows() - 1).transpose(); };
  in.delta = [&h](double) -> Vec { return h.delta.row(0).transpose(); };
  in.control = [lo, hi, d](double t) -> Vec {
    return lo + (hi - lo) * (0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * t / d));
  };
  const auto rep = verify_equivalence(m, in, c.seed, c.config.run.paths, c.config.run.horizon, {1, 2, 4},
                                      c.config.run.workers);
  std::vector<std::vector<double>> rows;
  double worst = 0.0;
  for (const auto& l : rep.levels) {
    rows.push_back({l.dt, l.sup_error_y, l.sup_error_segment, rep.fitted_order});
    worst = std::max(worst, l.sup_error_y);
  }
  c.write_csv("lift_check.csv", {"dt", "sup_error_y", "sup_error_segment", "fitted_order"}, rows);
  const bool det = deterministic(m);
  const double need = det ? c.tol("order_min_deterministic") : c.tol("order_min");
  const bool exact = worst <= c.tol("zero_error");
  json detail{{"deterministic", det}, {"max_error_y", worst}, {"monotone", rep.monotone},
              {"segment_order", rep.segment_order},
              {"fitted_order", exact ? json(nullptr) : json(rep.fitted_order)}, {"required_order", need}};
  c.check("lift.equivalence", "lift", "SDDE and lifted paths agree with decreasing error",
          exact || (rep.monotone && rep.fitted_order >= need), detail);
}

void operators(Context& c) {
  const auto& m = c.scenario.problem.model;
  const double mu = c.config.run.mu ? *c.config.run.mu : mu_zero(m) + 1.0;
  const OperatorPack pack(m, mu);

  const auto dis = dissipativity_check(pack, 10000, c.seed);
  c.check("operators.dissipativity", "operators", "<script_A x, x> <= mu0 |x|^2 + slack h |x|^2",
          dis.max_excess_over_h <= c.tol("dissipativity_slack"),
          {{"samples", dis.samples}, {"mu0", pack.mu0()}, {"max_excess_over_h", dis.max_excess_over_h},
           {"discrete_threshold", dis.discrete_threshold}});

  const auto cert = weak_b_certificate(pack, 10000, c.seed, c.tol("certificate"));
  json cd{{"mu", mu},
          {"mu0", pack.mu0()},
          {"samples", cert.samples},
          {"min_rayleigh", cert.min_rayleigh},
          {"symmetry_residual", cert.symmetry_residual},
          {"adjoint_norm", cert.adjoint_norm},
          {"identity_residual", cert.identity_residual},
          {"max_form", cert.max_form}};
  c.check("operators.certificate.i", "operators", "<Bx, x> > 0", cert.positivity, cd);
  c.check("operators.certificate.ii", "operators", "B symmetric",
          cert.symmetry && cert.symmetry_residual <= c.tol("symmetry"), cd);
  c.check("operators.certificate.iii", "operators", "A_tilde^* B bounded and equal to the inverse", cert.bounded, cd);
  c.check("operators.certificate.iv", "operators", "<A_tilde^* B x, x> <= 0", cert.dissipative, cd);
  if (!cert.ok()) {
    try {
      require_certificate(cert);
    } catch (const Error& e) {
      const std::string tag = std::string(to_string(e.kind())) + "(" + cert.first_failure() + ")";
      for (auto& ch : c.checks)
        if (!ch.pass && ch.name.starts_with("operators.certificate")) ch.detail["error"] = tag + ": " + e.what();
    }
  }

  std::vector<int> Ns;
  for (int N = 1; N < std::min(pack.dim(), 25); ++N) Ns.push_back(N);
  const auto bq = bq_norm_decay(pack, Ns);
  const auto tr = trace_decay(pack, m, Ns);
  double smax = 0.0;
  for (const Vec& u : m.controls().points()) smax = std::max(smax, m.control_diffusion(u).squaredNorm());
  bool decreasing = true, trace_ok = true;
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < Ns.size(); ++i) {
    if (i > 0) decreasing = decreasing && bq[i] < bq[i - 1];
    const double bound = m.n() * smax * bq[i];
    trace_ok = trace_ok && tr[i] <= bound * (1.0 + 1e-12) + 1e-300;
    rows.push_back({static_cast<double>(Ns[i]), bq[i], tr[i], bound});
  }
  c.write_csv("operators_decay.csv", {"N", "bq_norm", "trace", "trace_bound"}, rows);
  c.check("operators.bq_decay", "operators", "|B Q_N| strictly decreasing in N", decreasing, {{"bq_norm", to_json(bq)}});
  c.check("operators.trace_decay", "operators", "sup_u Tr[sigma sigma^T B Q_N] <= n max|sigma0|^2 |B Q_N|", trace_ok,
          {{"trace", to_json(tr)}});

  std::vector<std::vector<double>> cx;
  json cj = json::array();
  for (double N : {1e2, 1e3, 1e4, 1e6}) {
    const auto v = counterexample_value(N);
    cx.push_back({N, v.x0_abs, v.norm_sq, v.ratio_to_leading, v.witness});
    cj.push_back({{"N", N}, {"ratio", v.ratio_to_leading}, {"witness", v.witness}});
  }
  c.write_csv("operators_counterexample.csv", {"N", "x0_abs", "norm_sq", "ratio_to_leading", "witness"}, cx);
  const bool trend = std::abs(cx[2][3] - 1.0) <= std::abs(cx[1][3] - 1.0) &&
                     std::abs(cx[1][3] - 1.0) <= std::abs(cx[0][3] - 1.0);
  c.check("operators.counterexample", "operators",
          "|x0| = 1, |x^N|^2_{-1} 3N in [0.9, 1.1] at N = 1e3 with trend to 1, witness > 1e3 at N = 1e6",
          cx[0][1] == 1.0 && cx[3][1] == 1.0 && cx[1][3] >= 0.9 && cx[1][3] <= 1.1 && trend && cx[3][4] > 1e3, {{"values", cj}});
  c.write_json("operators.json", {{"mu", mu}, {"mu0", pack.mu0()}, {"dim", pack.dim()}});
}

void hamiltonian_check(Context& c) {
  const auto& p = c.scenario.problem;
  const double mu = c.config.run.mu ? *c.config.run.mu : mu_zero(p.model) + 1.0;
  const auto mono = monotonicity_check(p, mu, 1000, c.seed);
  c.check("hamiltonian.monotone", "hamiltonian", "H non-increasing in Z00 in the PSD order", mono.violations == 0,
          {{"pairs", mono.pairs}, {"violations", mono.violations}, {"max_increase", mono.max_increase}});
  const auto lip = lipschitz_diagnostic(p, mu, 1000, c.seed, 5.0);
  c.check("hamiltonian.lipschitz", "hamiltonian", "local Lipschitz ratio <= 1 on |x| <= 5",
          lip.max_ratio <= c.tol("lipschitz_ratio"),
          {{"samples", lip.samples}, {"constant", lip.constant}, {"max_ratio", lip.max_ratio}});
  c.write_json("hamiltonian.json", {{"mu", mu}, {"constant", lip.constant}});
}

void value(Context& c) {
  const auto& p = c.scenario.problem;
  const auto& m = p.model;
  const auto& run = c.config.run;
  const auto& g = m.grid();
  const LiftedState x = structural_state(m, c.scenario.history);

  std::vector<std::vector<double>> rows;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m.controls().size(); ++i) {
    const auto est = evaluate_policy(p, c.scenario.history, FeedbackPolicy::constant(i), run.horizon, run.paths, c.seed,
                                     Route::Sdde, run.workers);
    rows.push_back({static_cast<double>(i), m.controls()[i](0), est.mean, est.std_error, est.tail_bound});
    best = std::min(best, est.mean);
  }
  c.write_csv("value_policies.csv", {"index", "u0", "mean", "std_error", "tail_bound"}, rows);

  const auto& vm = c.value_model();
  const double v0 = vm.predict(g, x);
  json summary{{"lsmc_value", v0}, {"best_constant_policy", best}, {"decisions", vm.decisions()}, {"moments_used", vm.moments}};
  const bool small = std::pow(static_cast<double>(m.controls().size()), run.decisions) <= 1e7;
  if (deterministic(m) && small) {
    const auto bf = brute_force_value(p, c.scenario.history, run.horizon, run.decisions);
    summary["brute_force"] = bf.value;
    c.check("value.brute_force", "value", "LSMC within value_rel of brute force",
            std::abs(v0 - bf.value) <= c.tol("value_rel") * std::abs(bf.value),
            {{"lsmc", v0}, {"brute_force", bf.value}});
  }

  const auto mom = moment_bound_check(p, x, 2.0, run.paths, 2.0 * g.delay(), FeedbackPolicy::constant(middle_index(m)),
                                      c.seed, c.tol("moment_margin"), run.workers);
  std::vector<std::vector<double>> mrows;
  for (std::size_t k = 0; k < mom.times.size(); ++k) mrows.push_back({mom.times[k], mom.moments[k]});
  c.write_csv("value_moments.csv", {"t", "second_moment"}, mrows);
  c.check("value.moment_bound", "value", "fitted growth rate of E|Y|^2 <= (rho + rho0)/2 + margin", mom.ok,
          {{"slope", mom.slope}, {"lambda", mom.lambda}, {"fitted_c", mom.fitted_c}, {"paths", run.paths}});

  OperatorPack pack(m, run.mu ? *run.mu : mu_zero(m) + 1.0);
  const auto bc = b_continuity_check(p, pack, vm, 300, 3.0, c.seed);
  std::vector<std::vector<double>> brows;
  for (std::size_t i = 0; i < bc.distances.size(); ++i) brows.push_back({bc.distances[i], bc.differences[i]});
  c.write_csv("value_b_continuity.csv", {"minus_one_distance", "value_difference"}, brows);
  const double top = *std::max_element(bc.envelope.begin(), bc.envelope.end());
  c.check("value.b_continuity", "value", "envelope of |V(x)-V(y)| grows with |x-y|_{-1}, top decile largest",
          top <= c.tol("zero_error") || (bc.shrinks && bc.top_is_largest), {{"envelope", to_json(bc.envelope)}});
  c.write_json("value.json", summary);
}

std::vector<std::vector<double>> residual_rows(const ResidualTable& t) {
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < t.residuals.size(); ++i)
    rows.push_back({static_cast<double>(i), t.residuals[i], t.std_errors[i]});
  return rows;
}

void dpp(Context& c) {
  const auto& vm = c.value_model();
  const auto t = dpp_residual(c.scenario.problem, vm, c.held_out, c.config.run.inner_paths, c.seed + 77, 0,
                              c.config.run.workers);
  c.write_csv("dpp_residuals.csv", {"state", "residual", "std_error"}, residual_rows(t));
  c.check("dpp.median", "value", "median |DPP residual| <= dpp_factor x median standard error",
          t.median_abs <= c.tol("dpp_factor") * t.median_se, {{"median_abs", t.median_abs}, {"median_se", t.median_se}});
}

void hjb(Context& c) {
  const auto& p = c.scenario.problem;
  const auto& vm = c.value_model();
  OperatorPack pack(p.model, c.config.run.mu ? *c.config.run.mu : mu_zero(p.model) + 1.0);
  const auto fit = hjb_residual(p, pack, vm, c.held_out);
  const auto ctrl = random_value_model(vm.n, vm.moments, vm.degree, vm.decisions(), vm.step, 1.0, c.seed + 4);
  const auto neg = hjb_residual(p, pack, ctrl, c.held_out);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < fit.residuals.size(); ++i) rows.push_back({static_cast<double>(i), fit.residuals[i], neg.residuals[i]});
  c.write_csv("hjb_residuals.csv", {"state", "residual", "untrained_residual"}, rows);
  c.check("hjb.median", "value", "median |HJB residual| of the fit < untrained control", fit.median_abs < neg.median_abs,
          {{"trained", fit.median_abs}, {"untrained", neg.median_abs}});
}

}  // namespace

std::vector<std::pair<std::string, std::vector<std::string>>> check_catalog() {
  return {
      {"simulate", {"simulate.finite: Euler-Maruyama paths of the delay equation under a constant lattice control"}},
      {"lift-check", {"lift.equivalence: y(t) vs first component of the lifted mild solution, shared noise, dt in {h, h/2, h/4}"}},
      {"operators",
       {"operators.dissipativity: bounded perturbation of the generator", "operators.certificate.i..iv: weak B condition",
        "operators.bq_decay, operators.trace_decay: compactness of B through finite projections",
        "operators.counterexample: the first component is not continuous in the weak norm"}},
      {"hamiltonian-check", {"hamiltonian.monotone: order in the second-order argument",
                             "hamiltonian.lipschitz: local Lipschitz bound"}},
      {"value", {"value.brute_force: LSMC vs enumeration (deterministic, small lattices only)",
                 "value.moment_bound: growth rate of the second moment",
                 "value.b_continuity: continuity of the fit in the weak norm"}},
      {"dpp", {"dpp.median: dynamic programming residual against inner Monte Carlo error"}},
      {"hjb-residual", {"hjb.median: HJB residual of the fit vs an untrained control"}},
  };
}

Command find_command(const std::string& name) {
  if (name == "simulate") return simulate;
  if (name == "lift-check") return lift_check;
  if (name == "operators") return operators;
  if (name == "hamiltonian-check") return hamiltonian_check;
  if (name == "value") return value;
  if (name == "dpp") return dpp;
  if (name == "hjb-residual") return hjb;
  return nullptr;
}

const std::vector<std::string>& pipeline() {
  static const std::vector<std::string> all{"simulate", "lift-check", "operators", "hamiltonian-check",
                                            "value", "dpp", "hjb-residual"};
  return all;
}

}  // namespace cli
