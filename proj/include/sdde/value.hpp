#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "sdde/hamiltonian.hpp"
#include "sdde/operators.hpp"

namespace sdde {

// Features of a lifted state: x0 followed by <x1, s^i>, i < moments, with
// s = (xi + d)/d. Each block has n entries.
Vec features(const SegmentGrid& grid, const LiftedState& x, int moments);
int feature_count(int n, int moments);
// X-gradient of feature k (a constant element of X since features are linear).
LiftedState feature_gradient(const SegmentGrid& grid, int n, int moments, int k);

struct FeedbackPolicy {
  std::function<std::size_t(const Vec& features)> rule;
  int moments = 0;  // segment functionals the rule reads; 0 means x0 only

  static FeedbackPolicy constant(std::size_t index);
  // lattice[below] while x0[component] < level, lattice[above] otherwise
  static FeedbackPolicy threshold(int component, double level, std::size_t below, std::size_t above);
};

enum class Route { Lift, Sdde };

struct ValueEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  int paths = 0;
  double horizon = 0.0;
  double tail_bound = 0.0;
  double fitted_c = 0.0;  // max_t E|Y0(t)|^m e^{-lambda t} / (1 + |x|^m)
};

// Discounted running cost on [0, T]. Cells use the exact exponential weights
// of the linear interpolant of l along the path.
ValueEstimate evaluate_policy(const Problem& problem, const LiftedState& x, const FeedbackPolicy& policy, double T,
                              int paths, std::uint64_t seed, int workers = 1);
ValueEstimate evaluate_policy(const Problem& problem, const HistoryPair& history, const FeedbackPolicy& policy,
                              double T, int paths, std::uint64_t seed, Route route = Route::Sdde, int workers = 1);

struct BruteForceResult {
  double value = 0.0;
  std::vector<std::size_t> sequence;  // lattice index per decision block
};

// Exhaustive minimum over piecewise-constant lattice sequences with `decisions`
// equal blocks on [0, T]. Requires sigma0 = 0 on the lattice.
BruteForceResult brute_force_value(const Problem& problem, const HistoryPair& history, double T, int decisions);

struct ValueModel {
  int n = 1;
  int moments = 3;
  int degree = 2;
  double step = 0.0;                  // time between decision points
  std::vector<Vec> coefficients;      // one per decision time, last is the terminal (zero) model
  std::vector<std::vector<int>> basis;  // monomial exponents over the features

  int decisions() const noexcept { return static_cast<int>(coefficients.size()) - 1; }
  double predict(const SegmentGrid& grid, const LiftedState& x, int k = 0) const;
  LiftedState gradient(const SegmentGrid& grid, const LiftedState& x, int k = 0) const;
  Mat hessian00(const SegmentGrid& grid, const LiftedState& x, int k = 0) const;
};

std::vector<std::vector<int>> monomial_basis(int features, int degree);
// Coefficients drawn N(0, scale^2); the terminal model stays zero.
ValueModel random_value_model(int n, int moments, int degree, int decisions, double step, double scale,
                              std::uint64_t seed);

struct LsmcConfig {
  double horizon = 2.0;
  int decisions = 8;
  int paths_per_state = 20;
  int moments = 3;
  int degree = 2;
  double ridge = 1e-4;  // on the column-scaled design, times the sample count
  std::uint64_t seed = 0;
  int workers = 1;
};

// Backward induction over the decision times: the target at a training state
// is the lattice minimum of the Monte Carlo block cost plus the discounted
// fitted continuation. Training states after time 0 come from forward runs
// under uniformly drawn lattice controls.
ValueModel lsmc_value(const Problem& problem, const std::vector<LiftedState>& states, const LsmcConfig& config);

// Structural states of histories perturbed by random constant and linear
// shifts of size `scale` (control shifts are clipped to the box).
std::vector<LiftedState> perturbed_states(const SddeModel& model, const HistoryPair& history, int count, double scale,
                                          std::uint64_t seed);

struct ResidualTable {
  std::vector<double> residuals;
  std::vector<double> std_errors;  // inner Monte Carlo standard error (DPP only)
  double median_abs = 0.0;
  double median_se = 0.0;
};

// V(x) - min_u E[block cost + e^{-rho step} V_{k+1}(Y(step))] at decision time k.
ResidualTable dpp_residual(const Problem& problem, const ValueModel& model, const std::vector<LiftedState>& states,
                           int paths, std::uint64_t seed, int k = 0, int workers = 1);

// rho V - <A_tilde x, DV> + H(x, DV, D^2V_00) with the time-0 model.
ResidualTable hjb_residual(const Problem& problem, const OperatorPack& pack, const ValueModel& model,
                           const std::vector<LiftedState>& states);

struct MomentReport {
  std::vector<double> times;
  std::vector<double> moments;  // E|Y(t)|_X^m
  double slope = 0.0;
  double intercept = 0.0;
  double lambda = 0.0;
  double fitted_c = 0.0;
  bool ok = false;
};

MomentReport moment_bound_check(const Problem& problem, const LiftedState& x, double m, int paths, double T,
                                const FeedbackPolicy& policy, std::uint64_t seed, double margin = 0.1,
                                int workers = 1);

struct BContinuityReport {
  std::vector<double> distances;    // |x - y|_{-1}
  std::vector<double> differences;  // |V(x) - V(y)|
  std::vector<double> envelope;     // max difference per distance decile
  bool shrinks = false;             // lowest decile envelope below the highest
  bool top_is_largest = false;
};

BContinuityReport b_continuity_check(const Problem& problem, const OperatorPack& pack, const ValueModel& model,
                                     int pairs, double radius, std::uint64_t seed);

}  // namespace sdde
