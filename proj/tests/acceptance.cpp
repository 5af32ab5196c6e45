// One PASS/FAIL line per acceptance criterion. argv[1]: path to sdde_cli (criterion 9).
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "sdde/hamiltonian.hpp"
#include "sdde/operators.hpp"
#include "sdde/scenarios.hpp"
#include "sdde/value.hpp"

using namespace sdde;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::cout << (pass ? "PASS " : "FAIL ") << id << " " << name << ": " << detail << std::endl;
  if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Vec v1(double x) { return Vec::Constant(1, x); }

void equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  EquivalenceInput in{v1(1.0), [](double t) { return v1(1.0 + 0.3 * t); }, [](double) { return v1(0.5); },
                      [](double t) { return v1(0.5 + 0.4 * std::sin(2.0 * t)); }};
  AdvertisingParams a;
  const auto sto = advertising_model(a);
  const double T = 2.0 * a.delay;
  const auto rs = verify_equivalence(sto.model, in, 1, 1000, T);
  a.sigma0 = a.gamma0 = 0.0;
  const auto rd = verify_equivalence(advertising_model(a).model, in, 1, 1, T);
  const double secs = seconds_since(t0);
  std::string errs;
  for (const auto& l : rs.levels) errs += fmt("%.3g ", l.sup_error_y);
  report(1, "equivalence", rs.monotone && rs.fitted_order >= 0.4 && rd.monotone && rd.fitted_order >= 0.9 && secs <= 120.0,
         fmt("stochastic errors %sorder %.3f (>= 0.4), deterministic order %.3f (>= 0.9), %.1fs", errs.c_str(),
             rs.fitted_order, rd.fitted_order, secs));
}

void dissipativity() {
  const auto t0 = std::chrono::steady_clock::now();
  AdvertisingParams a;
  a.intervals = 64;
  const OperatorPack pack(advertising_model(a).model);
  const auto rep = dissipativity_check(pack, 10000, 2);
  const double secs = seconds_since(t0);
  report(2, "dissipativity", rep.max_excess_over_h <= 10.0 && secs <= 10.0,
         fmt("%d samples, K = 64, max (<Ax,x> - mu0|x|^2)/(h|x|^2) = %.3g (<= 10), %.2fs", rep.samples,
             rep.max_excess_over_h, secs));
}

LiftedState smooth(const SegmentGrid& g) {
  LiftedState x{v1(0.7), GridFn(g.nodes(), 1)};
  for (int j = 0; j < g.nodes(); ++j) {
    const double s = g.node(j) + g.delay();
    x.x1(j, 0) = 0.4 + 0.8 * std::sin(2.0 * s) - 0.3 * s * s;
  }
  return x;
}

void inverse_resolvent() {
  bool ok = true;
  std::vector<double> hs, inv_res, res_res;
  for (int K : {32, 64, 128}) {
    AdvertisingParams a;
    a.intervals = K;
    const OperatorPack pack(advertising_model(a).model);
    const double h = pack.grid().spacing();
    const auto z = smooth(pack.grid());
    const Vec zv = pack.to_vector(z);
    const double r1 = pack.norm(pack.to_vector(apply_A_tilde(pack, a_tilde_inverse(pack, z))) - zv) / pack.norm(zv);
    const double lambda = 1.0;
    const auto x = resolvent(pack, lambda, z);
    const Vec xv = pack.to_vector(x);
    const double r2 = pack.norm(lambda * xv - pack.to_vector(apply_A_tilde(pack, x)) - zv) / pack.norm(zv);
    ok = ok && r1 <= 5.0 * h && r2 <= 5.0 * h;
    hs.push_back(h);
    inv_res.push_back(r1);
    res_res.push_back(r2);
  }
  const double o1 = fitted_order(hs, inv_res), o2 = fitted_order(hs, res_res);
  // first-order decay: fitted slope in [0.8, 1.2] (or residuals already at round-off)
  auto first_order = [](double o, const std::vector<double>& r) {
    return (o >= 0.8 && o <= 1.2) || r.back() <= 1e-12;
  };
  report(3, "inverse/resolvent", ok && first_order(o1, inv_res) && first_order(o2, res_res),
         fmt("inverse residuals %.3g %.3g %.3g order %.2f; resolvent %.3g %.3g %.3g order %.2f (<= 5h)", inv_res[0],
             inv_res[1], inv_res[2], o1, res_res[0], res_res[1], res_res[2], o2));
}

void certificate() {
  const OperatorPack pack(advertising_model({}).model);
  const auto rep = weak_b_certificate(pack, 10000, 3, 1e-8);
  const bool pass_main = rep.positivity && rep.min_rayleigh > 0.0 && rep.symmetry_residual <= 1e-10 &&
                         rep.bounded && rep.max_form <= 1e-8;
  // deliberate failure: mu below the discrete threshold, which lies below mu0
  const auto dis = dissipativity_check(pack, 200, 3);
  const double low = dis.discrete_threshold - 0.5 * std::abs(dis.discrete_threshold);
  const OperatorPack bad(advertising_model({}).model, low);
  const auto fail = weak_b_certificate(bad, 10000, 3, 1e-8);
  std::string kind;
  try {
    require_certificate(fail);
  } catch (const Error& e) {
    kind = std::string(to_string(e.kind())) + "(" + fail.first_failure() + ")";
  }
  report(4, "weak-B certificate", pass_main && kind == "CertificateFailed(iv)",
         fmt("symmetry %.2g (<= 1e-10), min Rayleigh %.3g (> 0), max form %.3g (<= 1e-8); mu = %.3g < mu0 = %.3g gives %s",
             rep.symmetry_residual, rep.min_rayleigh, rep.max_form, low, bad.mu0(), kind.empty() ? "no error" : kind.c_str()));
}

void counterexample() {
  const auto a = counterexample_value(1e2), b = counterexample_value(1e3), c = counterexample_value(1e4),
             w = counterexample_value(1e6);
  const bool unit = a.x0_abs == 1.0 && b.x0_abs == 1.0 && c.x0_abs == 1.0 && w.x0_abs == 1.0;
  const bool band = b.ratio_to_leading >= 0.9 && b.ratio_to_leading <= 1.1;
  const bool trend = std::abs(c.ratio_to_leading - 1.0) < std::abs(b.ratio_to_leading - 1.0) &&
                     std::abs(b.ratio_to_leading - 1.0) < std::abs(a.ratio_to_leading - 1.0);
  // the global bound |x0| <= C |x|_{-1} is expected to FAIL: the witness ratio is unbounded
  const bool bound_fails = w.witness > 1e3;
  report(5, "counterexample", unit && band && trend && bound_fails,
         fmt("ratio to 1/(3N) at N = 1e2, 1e3, 1e4: %.5f %.5f %.5f; witness at N = 1e6: %.4g (> 1e3, global bound fails)",
             a.ratio_to_leading, b.ratio_to_leading, c.ratio_to_leading, w.witness));
}

void decay() {
  const auto p = advertising_model({});
  const OperatorPack pack(p.model);
  std::vector<int> Ns;
  for (int N = 1; N < pack.dim(); ++N) Ns.push_back(N);
  const auto bq = bq_norm_decay(pack, Ns);
  const auto tr = trace_decay(pack, p.model, Ns);
  double smax = 0.0;
  for (const Vec& u : p.model.controls().points()) smax = std::max(smax, p.model.control_diffusion(u).squaredNorm());
  // |BQ_N| against the eigenvalues of B in the weighted inner product
  const Vec sw = pack.weights().cwiseSqrt();
  const Mat Bs = sw.asDiagonal() * pack.b() * sw.cwiseInverse().asDiagonal();
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (Bs + Bs.transpose()), Eigen::EigenvaluesOnly);
  const Vec ev = es.eigenvalues().reverse();
  double eig_gap = 0.0;
  for (std::size_t i = 0; i < Ns.size(); ++i) eig_gap = std::max(eig_gap, std::abs(bq[i] - ev(Ns[i])) / ev(0));
  bool decreasing = true, bounded = eig_gap <= 1e-8;
  double worst = 0.0;
  for (std::size_t i = 0; i < Ns.size(); ++i) {
    if (i > 0) decreasing = decreasing && bq[i] < bq[i - 1];
    const double bound = p.model.n() * smax * bq[i];
    bounded = bounded && tr[i] <= bound * (1.0 + 1e-12);
    if (bound > 0.0) worst = std::max(worst, tr[i] / bound);
  }
  report(6, "trace/projection decay", decreasing && bounded,
         fmt("|BQ_N| for N = 1..%d strictly decreasing: %s (%.3g -> %.3g), max |BQ_N - lambda_{N+1}|/lambda_1 %.2g; "
             "max trace/bound %.3f (<= 1)",
             Ns.back(), decreasing ? "yes" : "no", bq.front(), bq.back(), eig_gap, worst));
}

void hamiltonian_props() {
  const auto p = advertising_model({});
  const double mu = mu_zero(p.model) + 1.0;
  const auto mono = monotonicity_check(p, mu, 1000, 4);
  const auto lip = lipschitz_diagnostic(p, mu, 1000, 4, 5.0);
  report(7, "hamiltonian", mono.violations == 0 && lip.max_ratio <= 1.0,
         fmt("%d ordered pairs, %d violations; Lipschitz ratio max %.3f over %d samples in |x| <= 5", mono.pairs,
             mono.violations, lip.max_ratio, lip.samples));
}

double annuity(double rho, double T) { return (1.0 - std::exp(-rho * T)) / rho; }

void value_oracles() {
  AdvertisingParams a;
  a.sigma0 = a.gamma0 = 0.0;
  a.lattice_points = 2;
  a.g = 3.0;
  a.cost_constant = 3.0;
  const auto det = advertising_scenario(a);
  const auto bf = brute_force_value(det.problem, det.history, 1.5, 6);
  LsmcConfig cfg;
  cfg.horizon = 1.5;
  cfg.decisions = 6;
  cfg.paths_per_state = 1;
  const auto states = perturbed_states(det.problem.model, det.history, 80, 0.2, 3);
  const double v = lsmc_value(det.problem, states, cfg).predict(det.problem.model.grid(), states[0]);
  const double rel = std::abs(v - bf.value) / std::abs(bf.value);

  // dy = (int u) dt + 0.5 dW, l = y, constant u = 0.5 in the window: E y(t) = 1 + 0.5 t
  LinearParams lp;
  lp.p1 = 1.0;
  lp.sigma0 = 0.5;
  lp.cost_state = 1.0;
  lp.delta0 = 0.5;
  lp.growth = 1.5;
  lp.rho = 3.0;
  const auto lin = linear_scenario(lp);
  const double rho = lp.rho, T = 2.0, u = 0.5;
  const double exact = lp.eta0 * annuity(rho, T) + u * lp.delay * (1.0 - std::exp(-rho * T) * (1.0 + rho * T)) / (rho * rho);
  const auto est = evaluate_policy(lin.problem, lin.history, FeedbackPolicy::constant(1), T, 10000, 21);
  const double z = std::abs(est.mean - exact) / est.std_error;
  report(8, "value oracles", rel <= 0.05 && z <= 3.0,
         fmt("LSMC %.6f vs brute force %.6f (rel %.2e <= 0.05); mean-ODE %.6f vs MC %.6f +- %.2g (%.2f SE <= 3)", v,
             bf.value, rel, exact, est.mean, est.std_error, z));
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void self_consistency(const std::string& cli) {
  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() / "sdde_acceptance";
  fs::remove_all(base);
  const auto t0 = std::chrono::steady_clock::now();
  int codes[2];
  for (int r = 0; r < 2; ++r) {
    const fs::path out = base / ("run" + std::to_string(r));
    const std::string cmd = "\"" + cli + "\" all --seed 11 --out-dir \"" + out.string() + "\" > \"" +
                            (base / ("stdout" + std::to_string(r))).string() + "\" 2>&1";
    fs::create_directories(base);
    codes[r] = std::system(cmd.c_str());
  }
  const double secs = seconds_since(t0) / 2.0;
  const std::string log = slurp(base / "stdout0");
  const bool dpp = log.find("PASS dpp.median") != std::string::npos;
  const bool hjb = log.find("PASS hjb.median") != std::string::npos;
  bool same = true;
  int compared = 0;
  for (const auto& e : fs::directory_iterator(base / "run0")) {
    const auto name = e.path().filename();
    if (name == "manifest.json") continue;
    same = same && slurp(e.path()) == slurp(base / "run1" / name);
    ++compared;
  }
  report(9, "DPP/HJB self-consistency", dpp && hjb && same && compared > 0 && secs <= 900.0,
         fmt("dpp %s, hjb %s, %d artifacts bit-identical across reruns: %s, all pipeline %.1fs (<= 900), exit %d",
             dpp ? "pass" : "fail", hjb ? "pass" : "fail", compared, same ? "yes" : "no", secs, codes[0]));
}

void moments() {
  const auto sc = advertising_scenario({});
  const auto x = structural_state(sc.problem.model, sc.history);
  const auto& U = sc.problem.model.controls();
  const auto rep = moment_bound_check(sc.problem, x, 2.0, 10000, 2.0 * sc.problem.model.grid().delay(),
                                      FeedbackPolicy::constant(U.size() / 2), 10, 0.1);
  report(10, "moment bound", rep.ok,
         fmt("fitted growth rate of E|Y|^2 over [0, 2d] = %.4f <= (rho + rho0)/2 + 0.1 = %.4f, 10^4 paths", rep.slope,
             rep.lambda + 0.1));
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <path to sdde_cli>\n";
    return 1;
  }
  equivalence();
  dissipativity();
  inverse_resolvent();
  certificate();
  counterexample();
  decay();
  hamiltonian_props();
  value_oracles();
  self_consistency(argv[1]);
  moments();
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
