#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdde/lift.hpp"

namespace sdde {

// max{|a0| + 1, (1/2) int |a1|_F^2}; NotLinearModel for general models.
double mu_zero(const SddeModel& model);

/// Discretized operator calculus on X_h = R^n x (grid nodes 1..K), node 0
/// being pinned to 0 by the domain condition x1(-d) = 0. The x1 block carries
/// weight h per node, so the upwind difference is exactly dissipative.
class OperatorPack {
 public:
  OperatorPack(const SddeModel& model, double mu);
  // mu = mu0 + 1
  explicit OperatorPack(const SddeModel& model);

  double mu() const noexcept { return mu_; }
  double mu0() const noexcept { return mu0_; }
  int n() const noexcept { return n_; }
  int dim() const noexcept { return static_cast<int>(weights_.size()); }
  const SegmentGrid& grid() const noexcept { return grid_; }
  const Mat& a0() const noexcept { return a0_; }
  const DelayKernelGrid& a1() const noexcept { return a1_; }

  const Vec& weights() const noexcept { return weights_; }
  const Mat& script_a() const noexcept { return script_a_; }  // A plus bounded part
  const Mat& a_tilde() const noexcept { return a_tilde_; }    // script_a - mu
  const Mat& inverse() const noexcept { return inverse_; }    // a_tilde^{-1}
  const Mat& b() const noexcept { return b_; }
  const Vec& eigenvalues() const noexcept { return eigenvalues_; }  // decreasing
  const Mat& eigenvectors() const noexcept { return eigenvectors_; }  // W-orthonormal columns

  double inner(const Vec& x, const Vec& y) const { return (x.array() * weights_.array() * y.array()).sum(); }
  double norm(const Vec& x) const { return std::sqrt(inner(x, x)); }
  // Adjoint with respect to the weighted inner product.
  Mat adjoint(const Mat& m) const;
  // Operator norm with respect to the weighted inner product.
  double op_norm(const Mat& m) const;

  // Node 0 is dropped: it carries zero weight in X_h.
  Vec to_vector(const LiftedState& x) const;
  LiftedState from_vector(const Vec& v) const;

 private:
  SegmentGrid grid_;
  int n_;
  Mat a0_;
  DelayKernelGrid a1_;
  double mu_;
  double mu0_;
  Vec weights_;
  Mat script_a_, a_tilde_, inverse_, b_;
  Vec eigenvalues_;
  Mat eigenvectors_;
};

// A x = (x1(0), -x1') by one-sided differences (forward at -d, backward
// elsewhere). DomainViolation if |x1(-d)| exceeds tol (1 + |x|).
LiftedState apply_A(const SegmentGrid& grid, const LiftedState& x, double tol = 1e-9);
LiftedState apply_script_A(const OperatorPack& pack, const LiftedState& x);
LiftedState apply_A_tilde(const OperatorPack& pack, const LiftedState& x);

// Closed forms evaluated by trapezoid quadrature with exact exponentials.
LiftedState a_tilde_inverse(const OperatorPack& pack, const LiftedState& z);
// (lambda I - A_tilde)^{-1} y
LiftedState resolvent(const OperatorPack& pack, double lambda, const LiftedState& y);

// |x|_{-1} = |A_tilde^{-1} x|_X and the matching inner product, via the pack.
double minus_one_norm(const OperatorPack& pack, const LiftedState& x);
double minus_one_inner(const OperatorPack& pack, const LiftedState& x, const LiftedState& y);

struct DissipativityReport {
  int samples = 0;
  // max over samples of (<script_A x, x> - mu0 |x|^2) / (h |x|^2)
  double max_excess_over_h = 0.0;
  // sup of <script_A x, x> / |x|^2 over X_h (symmetric-part eigenvalue)
  double discrete_threshold = 0.0;
};

// Samples x with x1(-d) = 0 (white noise and smooth profiles) on the
// trapezoid grid.
DissipativityReport dissipativity_check(const OperatorPack& pack, int samples, std::uint64_t seed);

struct WeakBReport {
  int samples = 0;
  bool positivity = false;
  double min_rayleigh = 0.0;  // min <Bx,x>/|x|^2
  bool symmetry = false;
  double symmetry_residual = 0.0;  // max |<Bx,y> - <x,By>| / (|x||y|)
  bool bounded = false;
  double adjoint_norm = 0.0;      // |A_tilde^* B|
  double identity_residual = 0.0;  // |A_tilde^* B - A_tilde^{-1}|
  bool dissipative = false;
  double max_form = 0.0;  // max <A_tilde^* B x, x> / |x|^2

  bool ok() const noexcept { return positivity && symmetry && bounded && dissipative; }
  // "i".."iv" for the first failing item, empty when all pass.
  std::string first_failure() const;
};

WeakBReport weak_b_certificate(const OperatorPack& pack, int samples, std::uint64_t seed, double tol = 1e-8);
// CertificateFailed naming the item.
void require_certificate(const WeakBReport& report);

struct Projections {
  Mat p;
  Mat q;
};

Projections projections(const OperatorPack& pack, int N);
// |B Q_N| by singular values of the weighted matrix.
double bq_norm(const OperatorPack& pack, int N);
std::vector<double> bq_norm_decay(const OperatorPack& pack, const std::vector<int>& Ns);
// sup over the control lattice of Tr[sigma sigma^T (B Q_N)_{00}].
std::vector<double> trace_decay(const OperatorPack& pack, const SddeModel& model, const std::vector<int>& Ns);

struct CounterexampleValue {
  double x0_abs = 0.0;
  double norm_sq = 0.0;  // |x^N|_{-1}^2
  double ratio_to_leading = 0.0;  // norm_sq * 3N
  double witness = 0.0;  // |x0| / |x|_{-1}
};

// x^N = (1, -N 1_{[-1/N, 0]}) with a0 = 0, a1 = 0, integrated exactly.
CounterexampleValue counterexample_value(double N, double mu = 1.0, double d = 1.0);

}  // namespace sdde
