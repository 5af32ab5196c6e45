#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "sdde/sim.hpp"

namespace sdde {

// x = (x0, x1) in R^n x L^2([-d,0]; R^n), x1 sampled on the K+1 grid nodes.
struct LiftedState {
  Vec x0;
  GridFn x1;

  static LiftedState zero(const SegmentGrid& grid, int n) { return {Vec::Zero(n), GridFn::Zero(grid.nodes(), n)}; }

  LiftedState& operator+=(const LiftedState& o) {
    x0 += o.x0;
    x1 += o.x1;
    return *this;
  }
  LiftedState& operator*=(double a) {
    x0 *= a;
    x1 *= a;
    return *this;
  }
  friend LiftedState operator+(LiftedState a, const LiftedState& b) { return a += b; }
  friend LiftedState operator-(LiftedState a, const LiftedState& b) { return a += (-1.0) * b; }
  friend LiftedState operator*(double s, LiftedState a) { return a *= s; }
};

double inner(const SegmentGrid& grid, const LiftedState& x, const LiftedState& y);
double norm_squared(const SegmentGrid& grid, const LiftedState& x);
inline double norm(const SegmentGrid& grid, const LiftedState& x) { return std::sqrt(norm_squared(grid, x)); }

// m(alpha1, beta)(xi_j) = trapezoid over zeta in [-d, xi_j] of
// a1(zeta) alpha1(zeta - xi_j) + p1(zeta) beta(zeta - xi_j).
// Both segments carry K+1 nodes; node K is the value at 0.
GridFn structural_segment(const SddeModel& model, const GridFn& alpha1, const GridFn& beta);
LiftedState structural_state(const SddeModel& model, const Vec& alpha0, const GridFn& alpha1, const GridFn& beta);
// M(eta, delta) with the state segment closed by eta0 at 0 and the control
// segment closed by the last value of delta.
LiftedState structural_state(const SddeModel& model, const HistoryPair& history);

// e^{tA} x: (x0 + int_{-t v -d}^0 x1, truncated right shift of x1).
LiftedState semigroup_apply(const SegmentGrid& grid, double t, const LiftedState& x);

struct AbstractTrajectory {
  std::vector<double> time;
  std::vector<LiftedState> states;
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;
};

/// Explicit scheme for the mild equation. Y0 takes an Euler step driven by the
/// cell average of Y1 at 0; Y1 is shifted one node and receives the one-step
/// trapezoid of the a1 Y0 source and the cell integral of p1 u. Node 0 stays 0.
class MildStepper {
 public:
  MildStepper(const SddeModel& model, LiftedState x);

  const LiftedState& state() const noexcept { return state_; }
  int step_index() const noexcept { return step_; }

  void advance(const Vec& u, const Eigen::Ref<const Vec>& dw);
  // Same transport and injection, but Y0 is overwritten with `y0_next`.
  void advance_forced(const Vec& u, const Vec& y0_next);

 private:
  void transport(const Vec& y_old, const Vec& y_new, const Vec& u);

  const SddeModel* model_;
  Mat cell_p1_;  // K stacked n x p blocks
  LiftedState state_;
  int step_ = 0;
};

AbstractTrajectory integrate_mild(const SddeModel& model, const LiftedState& x, const ControlPath& control,
                                  const BrownianPath& noise, double horizon);

struct EquivalenceInput {
  Vec eta0;
  std::function<Vec(double)> eta1;     // on [-d, 0]
  std::function<Vec(double)> delta;    // on [-d, 0)
  std::function<Vec(double)> control;  // on [0, T]
};

struct EquivalenceLevel {
  int intervals = 0;
  double dt = 0.0;
  double sup_error_y = 0.0;        // path mean of sup_t |y - Y0|
  double sup_error_segment = 0.0;  // path mean of sup_{t >= d} |Y1 - m(Y0~, u)|_{L2}
};

struct EquivalenceReport {
  std::vector<EquivalenceLevel> levels;
  double fitted_order = 0.0;
  double segment_order = 0.0;
  bool monotone = false;
};

// Least-squares slope of log(error) against log(dt); NaN if any error is 0.
double fitted_order(const std::vector<double>& dts, const std::vector<double>& errors);

// Runs both integrators on the base grid refined by each factor, sharing one
// Brownian path per index generated on the finest grid.
EquivalenceReport verify_equivalence(const SddeModel& base, const EquivalenceInput& input, std::uint64_t seed,
                                     int paths, double horizon, const std::vector<int>& refinements = {1, 2, 4},
                                     int workers = 1);

}  // namespace sdde
