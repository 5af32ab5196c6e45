#include "sdde/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "sdde/rng.hpp"

namespace sdde {

namespace {

constexpr const char* kModule = "hamiltonian";

void check_state(const SddeModel& model, const LiftedState& x, const char* what) {
  if (x.x0.size() != model.n() || x.x1.rows() != model.grid().nodes() || x.x1.cols() != model.n()) {
    throw Error(ErrorKind::GridMismatch, kModule, std::string(what) + " does not match the model grid");
  }
}

LiftedState random_state(const SddeModel& model, const NormalStream& rng, std::uint64_t stream, std::uint32_t step) {
  LiftedState x = LiftedState::zero(model.grid(), model.n());
  std::uint32_t slot = 0;
  for (int r = 0; r < model.n(); ++r) x.x0(r) = rng.normal(stream, step, slot++);
  for (int j = 0; j < x.x1.rows(); ++j)
    for (int r = 0; r < model.n(); ++r) x.x1(j, r) = rng.normal(stream, step, slot++);
  return x;
}

Mat random_symmetric(int n, const NormalStream& rng, std::uint64_t stream, std::uint32_t step) {
  Mat m(n, n);
  std::uint32_t slot = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = rng.normal(stream, step, slot++);
  return 0.5 * (m + m.transpose());
}

}  // namespace

double running_cost(const Problem& problem, const LiftedState& x, const Vec& u) {
  if (!problem.model.controls().contains(u)) throw Error(ErrorKind::ControlOutOfSet, kModule, "u is outside U");
  return problem.cost.running(x.x0, u);
}

LiftedState control_injection(const SddeModel& model, const Vec& u) {
  LiftedState f{model.control_drift(u), GridFn::Zero(model.grid().nodes(), model.n())};
  const auto& p1 = model.control_kernel();
  if (!p1.is_zero()) {
    for (int j = 0; j < f.x1.rows(); ++j) f.x1.row(j) = (p1.at(j) * u).transpose();
  }
  return f;
}

HamiltonianValue hamiltonian(const Problem& problem, double mu, const HamiltonianQuery& q) {
  const SddeModel& model = problem.model;
  const int n = model.n();
  check_state(model, q.x, "x");
  check_state(model, q.r, "r");
  if (q.z00.rows() != n || q.z00.cols() != n) {
    throw Error(ErrorKind::InvalidArgument, kModule, "Z must be the n x n block Z00");
  }
  if ((q.z00 - q.z00.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, q.z00.cwiseAbs().maxCoeff())) {
    throw Error(ErrorKind::InvalidArgument, kModule, "Z00 is not symmetric");
  }
  const auto& lattice = model.controls();
  if (lattice.size() == 0) throw Error(ErrorKind::EmptyControlLattice, kModule, "control lattice is empty");

  const SegmentGrid& g = model.grid();
  HamiltonianValue best;
  best.value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < lattice.size(); ++i) {
    const Vec& u = lattice[i];
    const Mat s = model.control_diffusion(u);
    const double v = -inner(g, control_injection(model, u), q.r) - 0.5 * (s.transpose() * q.z00 * s).trace() -
                     problem.cost.running(q.x.x0, u);
    if (v > best.value) {
      best.value = v;
      best.argmax = i;
    }
  }
  best.value -= mu * inner(g, q.x, q.r);
  return best;
}

double hamiltonian_constant(const Problem& problem, double mu) {
  const SddeModel& model = problem.model;
  double c = std::abs(mu);
  for (const Vec& u : model.controls().points()) {
    c = std::max(c, norm(model.grid(), control_injection(model, u)));
    c = std::max(c, model.control_diffusion(u).norm());
  }
  return c;
}

LipschitzReport lipschitz_diagnostic(const Problem& problem, double mu, int samples, std::uint64_t seed,
                                     double radius) {
  if (samples < 1) throw Error(ErrorKind::InvalidArgument, kModule, "need at least one sample");
  const SddeModel& model = problem.model;
  const SegmentGrid& g = model.grid();
  const NormalStream rng(seed);
  LipschitzReport rep;
  rep.samples = samples;
  rep.constant = hamiltonian_constant(problem, mu);
  const double C = rep.constant;
  for (int i = 0; i < samples; ++i) {
    const auto step = static_cast<std::uint32_t>(i);
    LiftedState x = random_state(model, rng, 0, step);
    x *= radius * rng.uniform(5, step, 0) / norm(g, x);
    const LiftedState r = random_state(model, rng, 1, step);
    LiftedState dq = random_state(model, rng, 2, step);
    dq *= std::pow(10.0, -3.0 * rng.uniform(5, step, 1));
    const Mat Y = random_symmetric(model.n(), rng, 3, step);
    Mat Z = random_symmetric(model.n(), rng, 4, step) * std::pow(10.0, -3.0 * rng.uniform(5, step, 2));
    const double base = hamiltonian(problem, mu, {x, r, Y}).value;
    const double moved = hamiltonian(problem, mu, {x, r + dq, Y + Z}).value;
    const double nx = 1.0 + norm(g, x);
    Eigen::SelfAdjointEigenSolver<Mat> es(Z, Eigen::EigenvaluesOnly);
    const double znorm = es.eigenvalues().cwiseAbs().maxCoeff();
    const double rhs = C * nx * norm(g, dq) + 0.5 * C * C * nx * nx * znorm;
    if (rhs > 0.0) rep.max_ratio = std::max(rep.max_ratio, std::abs(moved - base) / rhs);
  }
  return rep;
}

MonotonicityReport monotonicity_check(const Problem& problem, double mu, int pairs, std::uint64_t seed, double tol) {
  if (pairs < 1) throw Error(ErrorKind::InvalidArgument, kModule, "need at least one pair");
  const SddeModel& model = problem.model;
  const int n = model.n();
  const NormalStream rng(seed);
  MonotonicityReport rep;
  rep.pairs = pairs;
  rep.max_increase = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < pairs; ++i) {
    const auto step = static_cast<std::uint32_t>(i);
    const LiftedState x = random_state(model, rng, 10, step);
    const LiftedState r = random_state(model, rng, 11, step);
    const Mat Z = random_symmetric(n, rng, 12, step);
    Mat G(n, n);
    std::uint32_t slot = 0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) G(a, b) = rng.normal(13, step, slot++);
    const Mat P = G * G.transpose();
    const double lo = hamiltonian(problem, mu, {x, r, Z}).value;
    const double hi = hamiltonian(problem, mu, {x, r, Z + P}).value;
    rep.max_increase = std::max(rep.max_increase, hi - lo);
    if (hi > lo + tol * (1.0 + std::abs(lo))) ++rep.violations;
  }
  return rep;
}

}  // namespace sdde
