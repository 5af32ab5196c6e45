#pragma once

#include <cstdint>
#include <iosfwd>
#include <thread>
#include <vector>

#include "sdde/model.hpp"

namespace sdde {

struct BrownianPath {
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;
  double dt = 0.0;
  Mat increments;  // steps x q

  int steps() const noexcept { return static_cast<int>(increments.rows()); }
  double horizon() const noexcept { return dt * steps(); }
  // Sums blocks of `factor` consecutive increments: the same path on a
  // grid `factor` times coarser.
  BrownianPath coarsen(int factor) const;
};

// Increments keyed by (seed, path_index, step); identical arguments always
// give identical tables.
BrownianPath sample_brownian(std::uint64_t seed, std::uint64_t path_index, double dt, double horizon, int q);

// Piecewise-constant control on [0, T]: row k holds u on [t_k, t_{k+1}).
// The initial segment on [-d, 0) lives in HistoryPair::delta.
struct ControlPath {
  Mat values;  // steps x p

  int steps() const noexcept { return static_cast<int>(values.rows()); }
};

ControlPath constant_control(const Vec& u, int steps);
ControlPath sampled_control(const SegmentGrid& grid, const std::function<Vec(double)>& u, int steps);

struct Trajectory {
  std::vector<double> time;  // t_0 .. t_N
  Mat states;                // (N+1) x n
  Mat controls;              // N x p
  HistoryPair history;

  int steps() const noexcept { return static_cast<int>(controls.rows()); }
  // y(t_k + xi_j), j = 0..K, with history values for negative times.
  GridFn state_segment(int k) const;
  // u(t_k + xi_j), j = 0..K; node K carries u_k (u_{k-1} at the final node).
  GridFn control_segment(int k) const;
};

// Trapezoid quadrature of xi -> kernel(xi) segment(xi).
Vec delay_integral(const SegmentGrid& grid, const DelayKernelGrid& kernel, const GridFn& segment);

/// Explicit Euler-Maruyama state of the delayed equation with time step equal
/// to the grid spacing, so the lag window is an exact index shift.
class SddeStepper {
 public:
  SddeStepper(const SddeModel& model, const HistoryPair& history);

  const Vec& state() const noexcept { return current_; }
  int step_index() const noexcept { return step_; }
  double time() const noexcept { return step_ * model_->grid().spacing(); }

  GridFn state_segment() const;
  // Control window with `current` at node K.
  GridFn control_segment(const Vec& current) const;
  // Both distributed-delay drift terms for control `u` applied now.
  Vec delay_drift(const Vec& u) const;

  // One step under control u and Brownian increment dW.
  void advance(const Vec& u, const Eigen::Ref<const Vec>& dw);

 private:
  const SddeModel* model_;
  Mat states_;    // ring of the last K+1 states, oldest at head_
  Mat controls_;  // ring of the last K controls, oldest at chead_
  int head_ = 0;
  int chead_ = 0;
  Vec current_;
  int step_ = 0;
};

inline constexpr double kBlowUpThreshold = 1e12;

// NonFinite when a coordinate leaves [-kBlowUpThreshold, kBlowUpThreshold].
void check_finite(const Vec& y, int step, const char* module);

Trajectory simulate_sdde(const SddeModel& model, const HistoryPair& history, const ControlPath& control,
                         const BrownianPath& noise, double horizon);

void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
// Long format: a leading `path` column.
void write_batch_csv(std::ostream& os, const std::vector<Trajectory>& batch);

// Runs body(i) for i in [0, count) over `workers` threads. Bodies write to
// per-index slots; callers reduce in index order.
template <class Body>
void for_each_index(std::size_t count, int workers, Body&& body) {
  if (workers <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  const auto w = static_cast<std::size_t>(workers);
  std::vector<std::jthread> pool;
  pool.reserve(w);
  for (std::size_t t = 0; t < w; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < count; i += w) body(i);
    });
  }
}

}  // namespace sdde
