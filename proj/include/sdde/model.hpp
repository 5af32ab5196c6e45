#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sdde/error.hpp"

namespace sdde {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Grid function on [-d, 0]: one row per node, one column per component.
using GridFn = Eigen::MatrixXd;

/// Uniform grid xi_j = -d + j*h, j = 0..K, on the delay window [-d, 0],
/// carrying trapezoid weights.
class SegmentGrid {
 public:
  SegmentGrid(double delay, int intervals);

  double delay() const noexcept { return delay_; }
  int intervals() const noexcept { return intervals_; }
  int nodes() const noexcept { return intervals_ + 1; }
  double spacing() const noexcept { return spacing_; }
  double node(int j) const noexcept { return j == intervals_ ? 0.0 : -delay_ + j * spacing_; }
  const Vec& weights() const noexcept { return weights_; }

  double integrate(const Eigen::Ref<const Vec>& values) const;
  // Column-wise integral of a grid function.
  Vec integrate_columns(const GridFn& values) const;
  double inner(const GridFn& f, const GridFn& g) const;

  // Integer number of grid steps in t, or TimeNotAligned.
  int steps_for(double t, const char* module) const;

  bool operator==(const SegmentGrid& other) const noexcept {
    return intervals_ == other.intervals_ && delay_ == other.delay_;
  }

 private:
  double delay_;
  int intervals_;
  double spacing_;
  Vec weights_;
};

using KernelFn = std::function<Mat(double)>;

// Matrix-valued kernel sampled at the grid nodes.
class DelayKernelGrid {
 public:
  DelayKernelGrid() = default;
  static DelayKernelGrid sample(const SegmentGrid& grid, int rows, int cols, const KernelFn& fn);

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  int nodes() const noexcept { return nodes_; }
  bool is_zero() const noexcept { return zero_; }

  double operator()(int node, int r, int c) const { return values_(node * rows_ + r, c); }
  Mat at(int node) const { return values_.block(node * rows_, 0, rows_, cols_); }

  // Quadrature of each row's squared Euclidean norm, then square root.
  Vec row_l2_norms(const SegmentGrid& grid) const;
  // Integral of the squared Frobenius norm.
  double l2_norm_squared(const SegmentGrid& grid) const;

  // Trapezoid quadrature of xi -> kernel(xi) * segment(xi); segment has nodes() rows.
  Vec integrate_against(const SegmentGrid& grid, const GridFn& segment) const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  int nodes_ = 0;
  bool zero_ = true;
  Mat values_;  // stacked node blocks
};

/// Finite lattice of admissible control values inside a bounding box.
class ControlSet {
 public:
  ControlSet() = default;
  ControlSet(std::vector<Vec> points, Vec lower, Vec upper);

  // Tensor lattice with `points_per_axis` equally spaced values per axis.
  static ControlSet box(const Vec& lower, const Vec& upper, int points_per_axis);

  int dim() const noexcept { return static_cast<int>(lower_.size()); }
  std::size_t size() const noexcept { return points_.size(); }
  const Vec& operator[](std::size_t i) const { return points_[i]; }
  const std::vector<Vec>& points() const noexcept { return points_; }
  const Vec& lower() const noexcept { return lower_; }
  const Vec& upper() const noexcept { return upper_; }
  // sup over the bounding box of |u|.
  double bound() const;
  bool contains(const Vec& u, double tol = 1e-12) const;

 private:
  std::vector<Vec> points_;
  Vec lower_;
  Vec upper_;
};

// b0(y,u) = a0 y + drift(u), sigma0(y,u) = diffusion(u).
struct LinearDynamics {
  Mat a0;
  std::function<Vec(const Vec&)> drift;
  std::function<Mat(const Vec&)> diffusion;
};

struct ModelSpec {
  int n = 1;
  int p = 1;
  int q = 1;
  double delay = 1.0;
  int intervals = 16;
  // General state-dependent coefficients; ignored when `linear` is set.
  std::function<Vec(const Vec&, const Vec&)> drift;
  std::function<Mat(const Vec&, const Vec&)> diffusion;
  std::optional<LinearDynamics> linear;
  KernelFn state_kernel;    // a1, n x n; empty means zero
  KernelFn control_kernel;  // p1, n x p; empty means zero
  double lipschitz = 1.0;   // declared L
  double growth = 1.0;      // declared C
};

class SddeModel {
 public:
  SddeModel(ModelSpec spec, ControlSet controls);

  const ModelSpec& spec() const noexcept { return spec_; }
  const SegmentGrid& grid() const noexcept { return grid_; }
  const DelayKernelGrid& state_kernel() const noexcept { return state_kernel_; }
  const DelayKernelGrid& control_kernel() const noexcept { return control_kernel_; }
  const ControlSet& controls() const noexcept { return controls_; }

  int n() const noexcept { return spec_.n; }
  int p() const noexcept { return spec_.p; }
  int q() const noexcept { return spec_.q; }
  bool is_linear() const noexcept { return spec_.linear.has_value(); }

  Vec drift(const Vec& y, const Vec& u) const;
  Mat diffusion(const Vec& y, const Vec& u) const;

  // Linear-model accessors; NotLinearModel otherwise.
  const Mat& a0() const;
  Vec control_drift(const Vec& u) const;
  Mat control_diffusion(const Vec& u) const;

  // Same model resampled on a grid with `intervals` subintervals.
  SddeModel with_intervals(int intervals) const;

 private:
  const LinearDynamics& linear(const char* what) const;

  ModelSpec spec_;
  ControlSet controls_;
  SegmentGrid grid_;
  DelayKernelGrid state_kernel_;
  DelayKernelGrid control_kernel_;
};

struct CostSpec {
  std::function<double(const Vec& z, const Vec& u)> running;
  double growth_constant = 1.0;  // K in |l| <= K(1+|z|^m)
  double exponent = 0.0;         // m
  double discount = 1.0;         // rho
};

struct Problem {
  SddeModel model;
  CostSpec cost;
  double rho0 = 0.0;

  Problem with_intervals(int intervals) const { return {model.with_intervals(intervals), cost, rho0}; }
};

struct ModelConfig {
  ModelSpec model;
  CostSpec cost;
  ControlSet controls;
  // Validation samples states on a dyadic lattice of 2^level + 1 points per
  // axis inside |y_i| <= radius; finer levels contain coarser ones.
  int validation_level = 5;
  double validation_radius = 10.0;
};

struct Violation {
  ErrorKind kind;
  std::string field;
  std::string message;
};

struct ModulusSample {
  double radius;
  double modulus;  // max |l(z,u) - l(z',u)| over adjacent lattice pairs inside the radius
};

struct ValidationReport {
  std::vector<Violation> violations;
  std::optional<Problem> problem;
  double rho0 = 0.0;
  double max_lipschitz_ratio = 0.0;
  double max_growth_ratio = 0.0;
  std::vector<ModulusSample> cost_modulus;

  bool ok() const noexcept { return violations.empty(); }
};

ValidationReport validate_model(const ModelConfig& config);
// Throws the first violation as an Error.
Problem validated_problem(const ModelConfig& config);

double rho_zero(double growth, double exponent);

struct GrowthExponentBound {
  bool unconstrained = false;
  double supremum = 0.0;

  bool admits(double k) const noexcept { return unconstrained || (k >= 0.0 && k < supremum); }
};

GrowthExponentBound admissible_growth_k(double growth, double discount);

// Initial data: eta0, eta1 on all K+1 nodes (node K is superseded by eta0
// in the simulator), delta on the K nodes of [-d, 0).
struct HistoryPair {
  Vec eta0;
  GridFn eta1;
  GridFn delta;
};

HistoryPair constant_history(const SddeModel& model, const Vec& eta0, const Vec& eta1_value,
                             const Vec& delta_value);
HistoryPair sample_history(const SddeModel& model, const Vec& eta0,
                           const std::function<Vec(double)>& eta1,
                           const std::function<Vec(double)>& delta);
// GridMismatch / ControlOutOfSet on malformed data.
void check_history(const SddeModel& model, const HistoryPair& history);

}  // namespace sdde
