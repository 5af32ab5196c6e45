#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "sdde/rng.hpp"
#include "sdde/value.hpp"
#include "value_internal.hpp"

namespace sdde {

namespace {

constexpr const char* kModule = "value";

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

void finish(ResidualTable& t) {
  std::vector<double> a;
  a.reserve(t.residuals.size());
  for (double r : t.residuals) a.push_back(std::abs(r));
  t.median_abs = median(a);
  t.median_se = median(t.std_errors);
}

}  // namespace

ResidualTable dpp_residual(const Problem& problem, const ValueModel& model, const std::vector<LiftedState>& states,
                           int paths, std::uint64_t seed, int k, int workers) {
  if (k < 0 || k >= model.decisions()) throw Error(ErrorKind::InvalidArgument, kModule, "decision index out of range");
  const SegmentGrid& g = problem.model.grid();
  ResidualTable t;
  t.residuals.resize(states.size());
  t.std_errors.resize(states.size());
  for_each_index(states.size(), workers, [&](std::size_t i) {
    const auto lm = detail::lattice_minimum(problem, model, states[i], k, paths, seed, i);
    t.residuals[i] = model.predict(g, states[i], k) - lm.value;
    t.std_errors[i] = lm.std_error;
  });
  finish(t);
  return t;
}

ResidualTable hjb_residual(const Problem& problem, const OperatorPack& pack, const ValueModel& model,
                           const std::vector<LiftedState>& states) {
  const SegmentGrid& g = problem.model.grid();
  if (!(pack.grid() == g)) throw Error(ErrorKind::GridMismatch, kModule, "operator pack grid differs from the model");
  ResidualTable t;
  for (const auto& x : states) {
    const LiftedState ax = apply_A_tilde(pack, x);
    const LiftedState dv = model.gradient(g, x);
    Mat z = model.hessian00(g, x);
    z = 0.5 * (z + z.transpose()).eval();
    const double H = hamiltonian(problem, pack.mu(), {x, dv, z}).value;
    t.residuals.push_back(problem.cost.discount * model.predict(g, x) - inner(g, ax, dv) + H);
  }
  finish(t);
  return t;
}

MomentReport moment_bound_check(const Problem& problem, const LiftedState& x, double m, int paths, double T,
                                const FeedbackPolicy& policy, std::uint64_t seed, double margin, int workers) {
  if (paths < 1) throw Error(ErrorKind::InvalidArgument, kModule, "need at least one path");
  const SddeModel& model = problem.model;
  const SegmentGrid& g = model.grid();
  const int steps = g.steps_for(T, kModule);
  const double h = g.spacing();
  std::vector<std::vector<double>> per_path(static_cast<std::size_t>(paths));
  for_each_index(per_path.size(), workers, [&](std::size_t i) {
    const auto noise = sample_brownian(seed, i, h, T, model.q());
    MildStepper st(model, x);
    auto& v = per_path[i];
    v.reserve(static_cast<std::size_t>(steps) + 1);
    v.push_back(std::pow(norm(g, st.state()), m));
    for (int k = 0; k < steps; ++k) {
      const Vec& u = detail::policy_control(model, policy, features(g, st.state(), policy.moments));
      st.advance(u, noise.increments.row(k).transpose());
      v.push_back(std::pow(norm(g, st.state()), m));
    }
  });

  MomentReport rep;
  rep.lambda = 0.5 * (problem.cost.discount + problem.rho0);
  const double base = 1.0 + std::pow(norm(g, x), m);
  for (int k = 0; k <= steps; ++k) {
    double acc = 0.0;
    for (const auto& v : per_path) acc += v[static_cast<std::size_t>(k)];
    acc /= paths;
    rep.times.push_back(k * h);
    rep.moments.push_back(acc);
    rep.fitted_c = std::max(rep.fitted_c, acc * std::exp(-rep.lambda * k * h) / base);
  }
  std::vector<double> ts, ls;
  for (std::size_t k = 0; k < rep.moments.size(); ++k) {
    if (rep.moments[k] > 0.0) {
      ts.push_back(rep.times[k]);
      ls.push_back(std::log(rep.moments[k]));
    }
  }
  if (ts.size() < 2) {
    rep.slope = 0.0;
    rep.intercept = ts.empty() ? -std::numeric_limits<double>::infinity() : ls.front();
    rep.ok = true;
    return rep;
  }
  const double tm = std::accumulate(ts.begin(), ts.end(), 0.0) / static_cast<double>(ts.size());
  const double lm = std::accumulate(ls.begin(), ls.end(), 0.0) / static_cast<double>(ls.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    sxy += (ts[i] - tm) * (ls[i] - lm);
    sxx += (ts[i] - tm) * (ts[i] - tm);
  }
  rep.slope = sxy / sxx;
  rep.intercept = lm - rep.slope * tm;
  rep.ok = rep.slope <= rep.lambda + margin && std::isfinite(rep.intercept);
  return rep;
}

BContinuityReport b_continuity_check(const Problem& problem, const OperatorPack& pack, const ValueModel& model,
                                     int pairs, double radius, std::uint64_t seed) {
  if (pairs < 10) throw Error(ErrorKind::InvalidArgument, kModule, "need at least ten pairs");
  const SegmentGrid& g = problem.model.grid();
  if (!(pack.grid() == g)) throw Error(ErrorKind::GridMismatch, kModule, "operator pack grid differs from the model");
  const int n = problem.model.n();
  const int K = g.intervals();
  const double d = -g.node(0);
  const NormalStream rng(seed);
  auto smooth = [&](std::uint64_t stream, std::uint32_t step) {
    LiftedState x = LiftedState::zero(g, n);
    std::uint32_t slot = 0;
    for (int r = 0; r < n; ++r) {
      x.x0(r) = rng.normal(stream, step, slot++);
      const double a = rng.normal(stream, step, slot++), b = rng.normal(stream, step, slot++);
      for (int j = 0; j <= K; ++j) {
        const double s = (g.node(j) + d) / d;
        x.x1(j, r) = a * std::sin(0.5 * std::numbers::pi * s) + b * std::sin(std::numbers::pi * s);
      }
    }
    return x;
  };

  BContinuityReport rep;
  for (int i = 0; i < pairs; ++i) {
    const auto step = static_cast<std::uint32_t>(i);
    LiftedState x = smooth(0, step);
    x *= 0.5 * radius * rng.uniform(3, step, 0) / std::max(norm(g, x), 1e-300);
    LiftedState dir = LiftedState::zero(g, n);
    switch (i % 3) {
      case 0:
        dir = smooth(1, step);
        break;
      case 1: {  // high frequency, x1 only
        const int freq = std::max(1, K / 2 - 1);
        for (int j = 0; j <= K; ++j)
          dir.x1.row(j).setConstant(std::sin(freq * std::numbers::pi * (g.node(j) + d) / d));
        break;
      }
      default: {  // (1, -N 1_{[-1/N, 0]}) with at least one cell of support
        const int cells = 1 << (static_cast<int>(rng.uniform(3, step, 1) * 5.0));
        const int span = std::min(K, cells);
        const double N = 1.0 / (span * g.spacing());
        dir.x0.setOnes();
        for (int j = K - span + 1; j <= K; ++j) dir.x1.row(j).setConstant(-N);
        break;
      }
    }
    const double eps = std::pow(10.0, -3.0 * rng.uniform(3, step, 2));
    dir *= eps * 0.5 * radius / std::max(norm(g, dir), 1e-300);
    const LiftedState y = x + dir;
    rep.distances.push_back(minus_one_norm(pack, dir));
    rep.differences.push_back(std::abs(model.predict(g, x) - model.predict(g, y)));
  }

  std::vector<std::size_t> order(rep.distances.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return rep.distances[a] < rep.distances[b]; });
  constexpr int kBins = 10;
  rep.envelope.assign(kBins, 0.0);
  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto bin = std::min<std::size_t>(kBins - 1, r * kBins / order.size());
    rep.envelope[bin] = std::max(rep.envelope[bin], rep.differences[order[r]]);
  }
  rep.shrinks = rep.envelope.front() < rep.envelope.back();
  rep.top_is_largest = *std::max_element(rep.envelope.begin(), rep.envelope.end()) == rep.envelope.back();
  return rep;
}

}  // namespace sdde
