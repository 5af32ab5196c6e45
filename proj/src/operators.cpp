#include "sdde/operators.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

#include "sdde/rng.hpp"

namespace sdde {

namespace {

constexpr const char* kModule = "operators";

double spectral_norm(const Mat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()(0);
}

}  // namespace

double mu_zero(const SddeModel& model) {
  const Mat& a0 = model.a0();
  const double a1 = model.state_kernel().is_zero() ? 0.0 : model.state_kernel().l2_norm_squared(model.grid());
  return std::max(spectral_norm(a0) + 1.0, 0.5 * a1);
}

OperatorPack::OperatorPack(const SddeModel& model) : OperatorPack(model, mu_zero(model) + 1.0) {}

OperatorPack::OperatorPack(const SddeModel& model, double mu)
    : grid_(model.grid()), n_(model.n()), a0_(model.a0()), a1_(model.state_kernel()), mu_(mu), mu0_(mu_zero(model)) {
  if (!std::isfinite(mu)) throw Error(ErrorKind::InvalidArgument, kModule, "mu must be finite");
  const int K = grid_.intervals();
  const int n = n_;
  const int D = n + n * K;
  const double h = grid_.spacing();
  auto idx = [n](int j, int r) { return n + (j - 1) * n + r; };

  weights_ = Vec::Constant(D, h);
  weights_.head(n).setOnes();

  script_a_ = Mat::Zero(D, D);
  script_a_.topLeftCorner(n, n) = a0_;
  for (int r = 0; r < n; ++r) script_a_(r, idx(K, r)) += 1.0;
  for (int j = 1; j <= K; ++j) {
    for (int r = 0; r < n; ++r) {
      if (!a1_.is_zero()) {
        for (int c = 0; c < n; ++c) script_a_(idx(j, r), c) = a1_(j, r, c);
      }
      script_a_(idx(j, r), idx(j, r)) -= 1.0 / h;
      if (j > 1) script_a_(idx(j, r), idx(j - 1, r)) += 1.0 / h;
    }
  }
  a_tilde_ = script_a_ - mu_ * Mat::Identity(D, D);

  Eigen::PartialPivLU<Mat> lu(a_tilde_);
  if (!(lu.rcond() > 1e-14)) throw Error(ErrorKind::SingularBlock, kModule, "discretized A_tilde is singular");
  inverse_ = lu.inverse();

  // Weighted Gram matrix of the inverse; B = W^{-1} G^T W G.
  Mat gram = inverse_.transpose() * weights_.asDiagonal() * inverse_;
  gram = 0.5 * (gram + gram.transpose()).eval();
  b_ = weights_.cwiseInverse().asDiagonal() * gram;

  const Vec isqrt = weights_.cwiseSqrt().cwiseInverse();
  const Mat sym = isqrt.asDiagonal() * gram * isqrt.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (sym + sym.transpose()));
  eigenvalues_ = es.eigenvalues().reverse();
  eigenvectors_ = isqrt.asDiagonal() * es.eigenvectors().rowwise().reverse();
}

Mat OperatorPack::adjoint(const Mat& m) const {
  return weights_.cwiseInverse().asDiagonal() * m.transpose() * weights_.asDiagonal();
}

double OperatorPack::op_norm(const Mat& m) const {
  const Vec s = weights_.cwiseSqrt();
  return spectral_norm(s.asDiagonal() * m * s.cwiseInverse().asDiagonal());
}

Vec OperatorPack::to_vector(const LiftedState& x) const {
  if (x.x1.rows() != grid_.nodes() || x.x1.cols() != n_ || x.x0.size() != n_) {
    throw Error(ErrorKind::GridMismatch, kModule, "state does not match the operator grid");
  }
  Vec v(dim());
  v.head(n_) = x.x0;
  for (int j = 1; j <= grid_.intervals(); ++j) v.segment(n_ + (j - 1) * n_, n_) = x.x1.row(j).transpose();
  return v;
}

LiftedState OperatorPack::from_vector(const Vec& v) const {
  LiftedState x{v.head(n_), GridFn::Zero(grid_.nodes(), n_)};
  for (int j = 1; j <= grid_.intervals(); ++j) x.x1.row(j) = v.segment(n_ + (j - 1) * n_, n_).transpose();
  return x;
}

LiftedState apply_A(const SegmentGrid& grid, const LiftedState& x, double tol) {
  if (x.x1.rows() != grid.nodes()) throw Error(ErrorKind::GridMismatch, kModule, "x1 is not on the grid");
  const double scale = 1.0 + norm(grid, x);
  if (x.x1.row(0).norm() > tol * scale) {
    throw Error(ErrorKind::DomainViolation, kModule, "x1(-d) must vanish for x to lie in the domain of A");
  }
  const int K = grid.intervals();
  const double h = grid.spacing();
  LiftedState out{x.x1.row(K).transpose(), GridFn(x.x1.rows(), x.x1.cols())};
  out.x1.row(0) = -(x.x1.row(1) - x.x1.row(0)) / h;
  for (int j = 1; j <= K; ++j) out.x1.row(j) = -(x.x1.row(j) - x.x1.row(j - 1)) / h;
  return out;
}

LiftedState apply_script_A(const OperatorPack& pack, const LiftedState& x) {
  LiftedState out = apply_A(pack.grid(), x);
  out.x0 += pack.a0() * x.x0;
  if (!pack.a1().is_zero()) {
    for (int j = 0; j < pack.grid().nodes(); ++j) out.x1.row(j) += (pack.a1().at(j) * x.x0).transpose();
  }
  return out;
}

LiftedState apply_A_tilde(const OperatorPack& pack, const LiftedState& x) {
  LiftedState out = apply_script_A(pack, x);
  out.x0 -= pack.mu() * x.x0;
  out.x1 -= pack.mu() * x.x1;
  return out;
}

namespace {

// Solves (kappa - a0 - int e^{kappa r} a1) x0 = sign (z0 + int e^{kappa r} z1),
// x1(xi) = int_{-d}^{xi} e^{-kappa (xi - r)} (sign z1(r) + a1(r) x0) dr.
LiftedState shifted_solve(const OperatorPack& pack, double kappa, double sign, const LiftedState& z) {
  const auto& g = pack.grid();
  const int n = pack.n();
  const int K = g.intervals();
  const double h = g.spacing();
  if (z.x1.rows() != g.nodes() || z.x1.cols() != n || z.x0.size() != n) {
    throw Error(ErrorKind::GridMismatch, kModule, "input does not match the operator grid");
  }
  const auto& w = g.weights();
  Mat block = kappa * Mat::Identity(n, n) - pack.a0();
  Vec rhs = z.x0;
  for (int j = 0; j <= K; ++j) {
    const double e = w(j) * std::exp(kappa * g.node(j));
    if (!pack.a1().is_zero()) block -= e * pack.a1().at(j);
    rhs += e * z.x1.row(j).transpose();
  }
  rhs *= sign;
  Eigen::JacobiSVD<Mat> svd(block, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sv = svd.singularValues();
  if (!(sv(n - 1) > 1e-12 * std::max(1.0, sv(0)))) {
    throw Error(ErrorKind::SingularBlock, kModule, "the R^n block of the closed form is singular");
  }
  LiftedState x{svd.solve(rhs), GridFn::Zero(g.nodes(), n)};
  const double decay = std::exp(-kappa * h);
  auto source = [&](int j) {
    Vec f = sign * z.x1.row(j).transpose();
    if (!pack.a1().is_zero()) f += pack.a1().at(j) * x.x0;
    return f;
  };
  Vec prev = source(0);
  for (int j = 1; j <= K; ++j) {
    Vec cur = source(j);
    x.x1.row(j) = (decay * x.x1.row(j - 1).transpose() + 0.5 * h * (decay * prev + cur)).transpose();
    prev = std::move(cur);
  }
  return x;
}

}  // namespace

LiftedState a_tilde_inverse(const OperatorPack& pack, const LiftedState& z) {
  return shifted_solve(pack, pack.mu(), -1.0, z);
}

LiftedState resolvent(const OperatorPack& pack, double lambda, const LiftedState& y) {
  if (!(lambda > 0.0)) throw Error(ErrorKind::InvalidArgument, kModule, "resolvent needs lambda > 0");
  return shifted_solve(pack, lambda + pack.mu(), 1.0, y);
}

double minus_one_norm(const OperatorPack& pack, const LiftedState& x) {
  return pack.norm(pack.inverse() * pack.to_vector(x));
}

double minus_one_inner(const OperatorPack& pack, const LiftedState& x, const LiftedState& y) {
  return pack.inner(pack.inverse() * pack.to_vector(x), pack.inverse() * pack.to_vector(y));
}

namespace {

// Sample states in vector form: white noise for even i, smooth sine profiles
// (vanishing at -d) for odd i.
Vec sample_state(const OperatorPack& pack, const NormalStream& rng, std::uint64_t stream, int i) {
  const int n = pack.n();
  const int K = pack.grid().intervals();
  const double d = -pack.grid().node(0);
  const auto step = static_cast<std::uint32_t>(i);
  Vec v(pack.dim());
  std::uint32_t slot = 0;
  for (int r = 0; r < n; ++r) v(r) = rng.normal(stream, step, slot++);
  if (i % 2 == 0) {
    for (int k = n; k < v.size(); ++k) v(k) = rng.normal(stream, step, slot++);
    return v;
  }
  constexpr int kModes = 6;
  Mat coef(kModes, n);
  for (int m = 0; m < kModes; ++m)
    for (int r = 0; r < n; ++r) coef(m, r) = rng.normal(stream, step, slot++) / (1.0 + m);
  for (int j = 1; j <= K; ++j) {
    const double s = (pack.grid().node(j) + d) / d;
    for (int r = 0; r < n; ++r) {
      double acc = 0.0;
      for (int m = 0; m < kModes; ++m) acc += coef(m, r) * std::sin(0.5 * (m + 1) * std::numbers::pi * s);
      v(n + (j - 1) * n + r) = acc;
    }
  }
  return v;
}

// Top eigenpair of the symmetric part of m in the weighted inner product.
std::pair<double, Vec> top_symmetric(const OperatorPack& pack, const Mat& m) {
  const Vec s = pack.weights().cwiseSqrt();
  const Mat t = s.asDiagonal() * m * s.cwiseInverse().asDiagonal();
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (t + t.transpose()));
  const int last = static_cast<int>(es.eigenvalues().size()) - 1;
  return {es.eigenvalues()(last), s.cwiseInverse().asDiagonal() * es.eigenvectors().col(last)};
}

}  // namespace

DissipativityReport dissipativity_check(const OperatorPack& pack, int samples, std::uint64_t seed) {
  if (samples < 1) throw Error(ErrorKind::InvalidArgument, kModule, "need at least one sample");
  const NormalStream rng(seed);
  const double h = pack.grid().spacing();
  DissipativityReport rep;
  rep.samples = samples;
  rep.max_excess_over_h = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) {
    const Vec x = sample_state(pack, rng, 0, i);
    const double nx = pack.inner(x, x);
    const double excess = (pack.inner(pack.script_a() * x, x) - pack.mu0() * nx) / (h * nx);
    rep.max_excess_over_h = std::max(rep.max_excess_over_h, excess);
  }
  rep.discrete_threshold = top_symmetric(pack, pack.script_a()).first;
  return rep;
}

std::string WeakBReport::first_failure() const {
  if (!positivity) return "i";
  if (!symmetry) return "ii";
  if (!bounded) return "iii";
  if (!dissipative) return "iv";
  return {};
}

WeakBReport weak_b_certificate(const OperatorPack& pack, int samples, std::uint64_t seed, double tol) {
  if (samples < 2) throw Error(ErrorKind::InvalidArgument, kModule, "need at least two samples");
  const NormalStream rng(seed);
  const Mat& B = pack.b();
  const Mat ab = pack.adjoint(pack.a_tilde()) * B;
  const auto [top, extremal] = top_symmetric(pack, ab);
  (void)top;

  WeakBReport rep;
  rep.samples = samples;
  rep.min_rayleigh = std::numeric_limits<double>::infinity();
  rep.max_form = -std::numeric_limits<double>::infinity();
  Vec prev;
  for (int i = 0; i < samples; ++i) {
    Vec x;
    if (i == samples - 1) {
      x = extremal;
    } else if (i % 2 == 0) {
      x = sample_state(pack, rng, 1, i);
    } else {
      // x = A_tilde y with y smooth and pinned, so the form probes the range of A_tilde.
      x = pack.a_tilde() * sample_state(pack, rng, 1, i);
    }
    const double nx = pack.inner(x, x);
    rep.min_rayleigh = std::min(rep.min_rayleigh, pack.inner(B * x, x) / nx);
    rep.max_form = std::max(rep.max_form, pack.inner(ab * x, x) / nx);
    if (i > 0) {
      const double r = std::abs(pack.inner(B * x, prev) - pack.inner(x, B * prev)) / (pack.norm(x) * pack.norm(prev));
      rep.symmetry_residual = std::max(rep.symmetry_residual, r);
    }
    prev = std::move(x);
  }
  const double bnorm = pack.op_norm(B);
  rep.adjoint_norm = pack.op_norm(ab);
  rep.identity_residual = pack.op_norm(ab - pack.inverse());
  const double scale = std::max(1.0, pack.op_norm(pack.a_tilde()) * bnorm);

  rep.positivity = rep.min_rayleigh > 0.0;
  rep.symmetry = rep.symmetry_residual <= tol * std::max(1.0, bnorm);
  rep.bounded = std::isfinite(rep.adjoint_norm) && rep.identity_residual <= tol * scale;
  rep.dissipative = rep.max_form <= tol;
  return rep;
}

void require_certificate(const WeakBReport& report) {
  const std::string item = report.first_failure();
  if (item.empty()) return;
  throw Error(ErrorKind::CertificateFailed, kModule, "weak-B item (" + item + ") failed");
}

Projections projections(const OperatorPack& pack, int N) {
  const int D = pack.dim();
  if (N < 1 || N > D) throw Error(ErrorKind::NOutOfRange, kModule, "N must lie in [1, grid dimension]");
  const Mat F = pack.eigenvectors().leftCols(N);
  Projections out;
  out.p = F * F.transpose() * pack.weights().asDiagonal();
  out.q = Mat::Identity(D, D) - out.p;
  return out;
}

double bq_norm(const OperatorPack& pack, int N) {
  if (N == pack.dim()) {
    projections(pack, N);
    return 0.0;
  }
  return pack.op_norm(pack.b() * projections(pack, N).q);
}

std::vector<double> bq_norm_decay(const OperatorPack& pack, const std::vector<int>& Ns) {
  std::vector<double> out;
  out.reserve(Ns.size());
  for (int N : Ns) out.push_back(bq_norm(pack, N));
  return out;
}

std::vector<double> trace_decay(const OperatorPack& pack, const SddeModel& model, const std::vector<int>& Ns) {
  const int n = pack.n();
  std::vector<Mat> sigmas;
  for (const Vec& u : model.controls().points()) sigmas.push_back(model.control_diffusion(u));
  std::vector<double> out;
  out.reserve(Ns.size());
  for (int N : Ns) {
    if (N == pack.dim()) {
      projections(pack, N);
      out.push_back(0.0);
      continue;
    }
    const Mat bq = pack.b() * projections(pack, N).q;
    const Mat block = bq.topLeftCorner(n, n);
    double sup = 0.0;
    for (const Mat& s : sigmas) sup = std::max(sup, (s.transpose() * block * s).trace());
    out.push_back(sup);
  }
  return out;
}

CounterexampleValue counterexample_value(double N, double mu, double d) {
  if (!(N * d >= 1.0) || !(mu > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, kModule, "counterexample needs mu > 0 and 1/N <= d");
  }
  const double g = mu / N;
  // c0 = 1 - (1 - e^{-g})/g, F = int_0^g (1 - e^{-t})^2 dt
  double c0 = 0.0, F = 0.0;
  if (g < 0.1) {
    double term = 1.0;  // g^m / m!
    for (int m = 1; m <= 30; ++m) {
      term *= g / m;
      const double sign = m % 2 == 1 ? 1.0 : -1.0;
      c0 += sign * term / (m + 1);
      if (m >= 3) F += sign * (std::ldexp(1.0, m - 1) - 2.0) * term;
    }
  } else {
    c0 = 1.0 + std::expm1(-g) / g;
    F = g + 2.0 * std::expm1(-g) - 0.5 * std::expm1(-2.0 * g);
  }
  const double x0 = c0 / mu;
  const double x1_sq = (N / mu) * (N / mu) * F / mu;
  CounterexampleValue out;
  out.x0_abs = 1.0;
  out.norm_sq = x0 * x0 + x1_sq;
  out.ratio_to_leading = out.norm_sq * 3.0 * N;
  out.witness = out.x0_abs / std::sqrt(out.norm_sq);
  return out;
}

}  // namespace sdde
