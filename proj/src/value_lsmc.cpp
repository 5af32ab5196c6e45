#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/QR>

#include "sdde/rng.hpp"
#include "sdde/value.hpp"
#include "value_internal.hpp"

namespace sdde {

namespace {

constexpr const char* kModule = "value";

void extend(std::vector<std::vector<int>>& out, std::vector<int>& cur, int pos, int left) {
  if (pos == static_cast<int>(cur.size())) {
    out.push_back(cur);
    return;
  }
  for (int e = 0; e <= left; ++e) {
    cur[pos] = e;
    extend(out, cur, pos + 1, left - e);
  }
  cur[pos] = 0;
}

double monomial(const std::vector<int>& e, const Vec& f) {
  double v = 1.0;
  for (std::size_t i = 0; i < e.size(); ++i)
    if (e[i] > 0) v *= std::pow(f(static_cast<int>(i)), e[i]);
  return v;
}

// d/df_a (and d/df_b when b >= 0) of the monomial.
double monomial_derivative(const std::vector<int>& e, const Vec& f, int a, int b = -1) {
  std::vector<int> ex = e;
  double c = 1.0;
  for (int idx : {a, b}) {
    if (idx < 0) continue;
    if (ex[idx] == 0) return 0.0;
    c *= ex[idx];
    --ex[idx];
  }
  return c * monomial(ex, f);
}

const Vec& coefficients_at(const ValueModel& m, int k) {
  if (k < 0 || k >= static_cast<int>(m.coefficients.size())) {
    throw Error(ErrorKind::InvalidArgument, kModule, "decision index out of range");
  }
  return m.coefficients[static_cast<std::size_t>(k)];
}

}  // namespace

std::vector<std::vector<int>> monomial_basis(int features, int degree) {
  std::vector<std::vector<int>> all;
  std::vector<int> cur(static_cast<std::size_t>(features), 0);
  extend(all, cur, 0, degree);
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    int sa = 0, sb = 0;
    for (int x : a) sa += x;
    for (int x : b) sb += x;
    return sa < sb;
  });
  return all;
}

double ValueModel::predict(const SegmentGrid& grid, const LiftedState& x, int k) const {
  const Vec& c = coefficients_at(*this, k);
  const Vec f = features(grid, x, moments);
  double v = 0.0;
  for (std::size_t b = 0; b < basis.size(); ++b) v += c(static_cast<int>(b)) * monomial(basis[b], f);
  return v;
}

LiftedState ValueModel::gradient(const SegmentGrid& grid, const LiftedState& x, int k) const {
  const Vec& c = coefficients_at(*this, k);
  const Vec f = features(grid, x, moments);
  LiftedState g = LiftedState::zero(grid, n);
  for (int i = 0; i < f.size(); ++i) {
    double dv = 0.0;
    for (std::size_t b = 0; b < basis.size(); ++b) dv += c(static_cast<int>(b)) * monomial_derivative(basis[b], f, i);
    if (dv != 0.0) g += dv * feature_gradient(grid, n, moments, i);
  }
  return g;
}

Mat ValueModel::hessian00(const SegmentGrid& grid, const LiftedState& x, int k) const {
  const Vec& c = coefficients_at(*this, k);
  const Vec f = features(grid, x, moments);
  Mat H = Mat::Zero(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (std::size_t i = 0; i < basis.size(); ++i) H(a, b) += c(static_cast<int>(i)) * monomial_derivative(basis[i], f, a, b);
  return H;
}

ValueModel random_value_model(int n, int moments, int degree, int decisions, double step, double scale,
                              std::uint64_t seed) {
  ValueModel m;
  m.n = n;
  m.moments = moments;
  m.degree = degree;
  m.step = step;
  m.basis = monomial_basis(feature_count(n, moments), degree);
  const NormalStream rng(seed);
  const int P = static_cast<int>(m.basis.size());
  for (int k = 0; k <= decisions; ++k) {
    Vec c = Vec::Zero(P);
    if (k < decisions)
      for (int b = 0; b < P; ++b) c(b) = scale * rng.normal(0, static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(b));
    m.coefficients.push_back(c);
  }
  return m;
}

std::vector<LiftedState> perturbed_states(const SddeModel& model, const HistoryPair& history, int count, double scale,
                                          std::uint64_t seed) {
  const NormalStream rng(seed);
  const SegmentGrid& g = model.grid();
  const int n = model.n();
  const int p = model.p();
  const double d = -g.node(0);
  const auto& U = model.controls();
  std::vector<LiftedState> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int c = 0; c < count; ++c) {
    HistoryPair hp = history;
    if (c > 0) {
      const auto step = static_cast<std::uint32_t>(c);
      std::uint32_t slot = 0;
      for (int r = 0; r < n; ++r) {
        const double a = rng.normal(7, step, slot++), b = rng.normal(7, step, slot++), s = rng.normal(7, step, slot++);
        hp.eta0(r) += scale * a;
        for (int j = 0; j < g.nodes(); ++j) hp.eta1(j, r) += scale * (b + s * (g.node(j) + d) / d);
      }
      for (int r = 0; r < p; ++r) {
        const double e = rng.normal(7, step, slot++);
        for (int j = 0; j < hp.delta.rows(); ++j)
          hp.delta(j, r) = std::clamp(hp.delta(j, r) + scale * e, U.lower()(r), U.upper()(r));
      }
      hp.eta1.row(g.nodes() - 1) = hp.eta0.transpose();
    }
    out.push_back(structural_state(model, hp));
  }
  return out;
}

namespace detail {

BlockOutcome run_block(const Problem& problem, const LiftedState& x, const Vec& u, const BrownianPath& noise) {
  const SddeModel& model = problem.model;
  const double h = model.grid().spacing();
  const double rho = problem.cost.discount;
  const auto w = cell_weights(rho, h);
  MildStepper st(model, x);
  double cost = 0.0;
  for (int s = 0; s < noise.steps(); ++s) {
    const Vec y0 = st.state().x0;
    st.advance(u, noise.increments.row(s).transpose());
    cost += std::exp(-rho * s * h) * (w.a * problem.cost.running(y0, u) + w.b * problem.cost.running(st.state().x0, u));
  }
  return {cost, st.state()};
}

std::uint64_t inner_path_id(int k, std::size_t i, int j, int paths) {
  return (std::uint64_t{1} << 40) + (static_cast<std::uint64_t>(k) * 1000003ull + i) * static_cast<std::uint64_t>(paths) +
         static_cast<std::uint64_t>(j);
}

LatticeMinimum lattice_minimum(const Problem& problem, const ValueModel& model, const LiftedState& x, int k, int paths,
                               std::uint64_t seed, std::size_t state_index) {
  const SddeModel& m = problem.model;
  const double h = m.grid().spacing();
  const double block = model.step;
  const double disc = std::exp(-problem.cost.discount * block);
  LatticeMinimum best;
  best.value = std::numeric_limits<double>::infinity();
  std::vector<BrownianPath> noise;
  noise.reserve(static_cast<std::size_t>(paths));
  for (int j = 0; j < paths; ++j) noise.push_back(sample_brownian(seed, inner_path_id(k, state_index, j, paths), h, block, m.q()));
  for (std::size_t ui = 0; ui < m.controls().size(); ++ui) {
    std::vector<double> samples;
    samples.reserve(static_cast<std::size_t>(paths));
    for (int j = 0; j < paths; ++j) {
      const auto out = run_block(problem, x, m.controls()[ui], noise[static_cast<std::size_t>(j)]);
      samples.push_back(out.cost + disc * model.predict(m.grid(), out.state, k + 1));
    }
    const double mean = mean_of(samples);
    if (mean < best.value) {
      best.value = mean;
      best.std_error = std_error_of(samples);
      best.index = ui;
    }
  }
  return best;
}

}  // namespace detail

ValueModel lsmc_value(const Problem& problem, const std::vector<LiftedState>& states, const LsmcConfig& config) {
  detail::require_discount(problem);
  const SddeModel& model = problem.model;
  const SegmentGrid& g = model.grid();
  if (states.empty()) throw Error(ErrorKind::InvalidArgument, kModule, "no training states");
  if (config.decisions < 1 || config.paths_per_state < 1 || !(config.ridge >= 0.0)) {
    throw Error(ErrorKind::InvalidArgument, kModule, "decisions and paths must be positive, ridge non-negative");
  }
  const int steps = g.steps_for(config.horizon, kModule);
  if (steps % config.decisions != 0) {
    throw Error(ErrorKind::HorizonNotAligned, kModule, "decision blocks must be whole grid steps");
  }
  const double h = g.spacing();
  const int S = config.decisions;
  const double block = h * (steps / S);

  ValueModel vm;
  vm.n = model.n();
  vm.moments = config.moments;
  vm.degree = config.degree;
  vm.step = block;
  vm.basis = monomial_basis(feature_count(vm.n, vm.moments), vm.degree);
  const int P = static_cast<int>(vm.basis.size());
  vm.coefficients.assign(static_cast<std::size_t>(S) + 1, Vec::Zero(P));

  // forward exploration
  const NormalStream rng(config.seed);
  const auto& U = model.controls();
  std::vector<std::vector<LiftedState>> levels{states};
  for (int k = 0; k + 1 < S; ++k) {
    const auto& cur = levels.back();
    std::vector<LiftedState> next(cur.size());
    for_each_index(cur.size(), config.workers, [&](std::size_t i) {
      const double r = rng.uniform(3, static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(i));
      const auto ui = std::min(U.size() - 1, static_cast<std::size_t>(r * static_cast<double>(U.size())));
      const std::uint64_t id = (std::uint64_t{1} << 41) + static_cast<std::uint64_t>(k) * 1000003ull + i;
      next[i] = detail::run_block(problem, cur[i], U[ui], sample_brownian(config.seed, id, h, block, model.q())).state;
    });
    levels.push_back(std::move(next));
  }

  for (int k = S - 1; k >= 0; --k) {
    const auto& xs = levels[static_cast<std::size_t>(k)];
    const auto N = xs.size();
    Vec targets(static_cast<int>(N));
    for_each_index(N, config.workers, [&](std::size_t i) {
      targets(static_cast<int>(i)) =
          detail::lattice_minimum(problem, vm, xs[i], k, config.paths_per_state, config.seed, i).value;
    });
    Mat design(static_cast<int>(N), P);
    for (std::size_t i = 0; i < N; ++i) {
      const Vec f = features(g, xs[i], vm.moments);
      for (int b = 0; b < P; ++b) design(static_cast<int>(i), b) = monomial(vm.basis[static_cast<std::size_t>(b)], f);
    }
    // column scaling keeps the rank test meaningful across feature magnitudes
    Vec scale(P);
    for (int b = 0; b < P; ++b) {
      const double s = design.col(b).cwiseAbs().maxCoeff();
      scale(b) = s > 0.0 ? s : 1.0;
    }
    const Mat scaled = design * scale.cwiseInverse().asDiagonal();
    Eigen::ColPivHouseholderQR<Mat> qr(scaled);
    qr.setThreshold(1e-10);
    if (qr.rank() < P) {
      throw Error(ErrorKind::RegressionSingular, kModule,
                  "design matrix is rank deficient at decision " + std::to_string(k));
    }
    Vec c;
    if (config.ridge > 0.0) {
      Mat aug(static_cast<int>(N) + P, P);
      aug << scaled, std::sqrt(config.ridge * static_cast<double>(N)) * Mat::Identity(P, P);
      Vec rhs = Vec::Zero(static_cast<int>(N) + P);
      rhs.head(static_cast<int>(N)) = targets;
      c = aug.colPivHouseholderQr().solve(rhs);
    } else {
      c = qr.solve(targets);
    }
    vm.coefficients[static_cast<std::size_t>(k)] = c.cwiseQuotient(scale);
  }
  return vm;
}

}  // namespace sdde
