#include "sdde/sim.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "sdde/rng.hpp"

namespace sdde {

namespace {

constexpr const char* kModule = "sdde_sim";

bool aligned(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)); }

void write_number(std::ostream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}

}  // namespace

BrownianPath BrownianPath::coarsen(int factor) const {
  if (factor < 1 || steps() % factor != 0) {
    throw Error(ErrorKind::HorizonNotAligned, kModule, "coarsening factor must divide the step count");
  }
  BrownianPath out{seed, path_index, dt * factor, Mat::Zero(steps() / factor, increments.cols())};
  for (int k = 0; k < steps(); ++k) out.increments.row(k / factor) += increments.row(k);
  return out;
}

BrownianPath sample_brownian(std::uint64_t seed, std::uint64_t path_index, double dt, double horizon, int q) {
  if (!(dt > 0.0) || horizon < dt * (1.0 - 1e-12) || q < 1) {
    throw Error(ErrorKind::InvalidArgument, kModule, "sample_brownian needs dt > 0, T >= dt, q >= 1");
  }
  const int steps = static_cast<int>(std::llround(horizon / dt));
  const NormalStream stream(seed);
  const double scale = std::sqrt(dt);
  BrownianPath path{seed, path_index, dt, Mat(steps, q)};
  for (int k = 0; k < steps; ++k) {
    for (int j = 0; j < q; j += 2) {
      const auto z = stream.pair(path_index, static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(j / 2));
      path.increments(k, j) = scale * z[0];
      if (j + 1 < q) path.increments(k, j + 1) = scale * z[1];
    }
  }
  return path;
}

ControlPath constant_control(const Vec& u, int steps) {
  ControlPath c{Mat(steps, u.size())};
  c.values.rowwise() = u.transpose();
  return c;
}

ControlPath sampled_control(const SegmentGrid& grid, const std::function<Vec(double)>& u, int steps) {
  const Vec first = u(0.0);
  ControlPath c{Mat(steps, first.size())};
  for (int k = 0; k < steps; ++k) c.values.row(k) = u(k * grid.spacing()).transpose();
  return c;
}

GridFn Trajectory::state_segment(int k) const {
  const int K = static_cast<int>(history.eta1.rows()) - 1;
  GridFn seg(K + 1, states.cols());
  for (int j = 0; j <= K; ++j) {
    const int i = k - K + j;
    seg.row(j) = i >= 0 ? states.row(i) : history.eta1.row(K + i);
  }
  return seg;
}

GridFn Trajectory::control_segment(int k) const {
  const int K = static_cast<int>(history.delta.rows());
  GridFn seg(K + 1, controls.cols());
  for (int j = 0; j <= K; ++j) {
    int i = k - K + j;
    if (i >= steps()) i = steps() - 1;
    seg.row(j) = i >= 0 ? controls.row(i) : history.delta.row(K + i);
  }
  return seg;
}

Vec delay_integral(const SegmentGrid& grid, const DelayKernelGrid& kernel, const GridFn& segment) {
  if (kernel.nodes() != grid.nodes()) throw Error(ErrorKind::GridMismatch, kModule, "kernel grid mismatch");
  if (segment.rows() != grid.nodes() || segment.cols() != kernel.cols()) {
    throw Error(ErrorKind::GridMismatch, kModule, "segment does not match the kernel grid");
  }
  return kernel.integrate_against(grid, segment);
}

SddeStepper::SddeStepper(const SddeModel& model, const HistoryPair& history) : model_(&model) {
  check_history(model, history);
  const int K = model.grid().intervals();
  states_ = history.eta1;
  states_.row(K) = history.eta0.transpose();
  controls_ = history.delta;
  current_ = history.eta0;
}

GridFn SddeStepper::state_segment() const {
  const int nodes = static_cast<int>(states_.rows());
  GridFn seg(nodes, states_.cols());
  for (int j = 0; j < nodes; ++j) seg.row(j) = states_.row((head_ + j) % nodes);
  return seg;
}

GridFn SddeStepper::control_segment(const Vec& current) const {
  const int K = static_cast<int>(controls_.rows());
  GridFn seg(K + 1, controls_.cols());
  for (int j = 0; j < K; ++j) seg.row(j) = controls_.row((chead_ + j) % K);
  seg.row(K) = current.transpose();
  return seg;
}

Vec SddeStepper::delay_drift(const Vec& u) const {
  const auto& w = model_->grid().weights();
  const auto& a1 = model_->state_kernel();
  const auto& p1 = model_->control_kernel();
  const int n = model_->n();
  const int p = model_->p();
  const int nodes = static_cast<int>(states_.rows());
  const int K = nodes - 1;
  Vec out = Vec::Zero(n);
  if (!a1.is_zero()) {
    for (int j = 0; j < nodes; ++j) {
      const int row = (head_ + j) % nodes;
      for (int r = 0; r < n; ++r) {
        double acc = 0.0;
        for (int c = 0; c < n; ++c) acc += a1(j, r, c) * states_(row, c);
        out(r) += w(j) * acc;
      }
    }
  }
  if (!p1.is_zero()) {
    for (int j = 0; j < nodes; ++j) {
      for (int r = 0; r < n; ++r) {
        double acc = 0.0;
        for (int c = 0; c < p; ++c) {
          const double uc = j == K ? u(c) : controls_((chead_ + j) % K, c);
          acc += p1(j, r, c) * uc;
        }
        out(r) += w(j) * acc;
      }
    }
  }
  return out;
}

void check_finite(const Vec& y, int step, const char* module) {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!std::isfinite(y(i)) || std::abs(y(i)) > kBlowUpThreshold) {
      throw Error(ErrorKind::NonFinite, module, "state left the finite range at step " + std::to_string(step));
    }
  }
}

void SddeStepper::advance(const Vec& u, const Eigen::Ref<const Vec>& dw) {
  const double h = model_->grid().spacing();
  Vec next = current_ + (model_->drift(current_, u) + delay_drift(u)) * h + model_->diffusion(current_, u) * dw;
  check_finite(next, step_ + 1, kModule);
  const int nodes = static_cast<int>(states_.rows());
  const int K = nodes - 1;
  // Oldest state and control drop out of the window.
  states_.row(head_) = next.transpose();
  head_ = (head_ + 1) % nodes;
  controls_.row(chead_) = u.transpose();
  chead_ = (chead_ + 1) % K;
  current_ = std::move(next);
  ++step_;
}

Trajectory simulate_sdde(const SddeModel& model, const HistoryPair& history, const ControlPath& control,
                         const BrownianPath& noise, double horizon) {
  const auto& grid = model.grid();
  if (!aligned(noise.dt, grid.spacing())) {
    throw Error(ErrorKind::HorizonNotAligned, kModule, "Brownian time step must equal the grid spacing");
  }
  int steps = 0;
  try {
    steps = grid.steps_for(horizon, kModule);
  } catch (const Error&) {
    throw Error(ErrorKind::HorizonNotAligned, kModule, "horizon is not a multiple of the time step");
  }
  if (noise.steps() < steps || control.steps() < steps || noise.increments.cols() != model.q()) {
    throw Error(ErrorKind::HorizonNotAligned, kModule, "noise or control path shorter than the horizon");
  }
  for (int k = 0; k < steps; ++k) {
    if (!model.controls().contains(control.values.row(k).transpose())) {
      throw Error(ErrorKind::ControlOutOfSet, kModule, "control path leaves the control set at step " + std::to_string(k));
    }
  }

  Trajectory traj;
  traj.history = history;
  traj.time.resize(steps + 1);
  traj.states.resize(steps + 1, model.n());
  traj.controls = control.values.topRows(steps);
  SddeStepper stepper(model, history);
  traj.states.row(0) = history.eta0.transpose();
  traj.time[0] = 0.0;
  for (int k = 0; k < steps; ++k) {
    stepper.advance(control.values.row(k).transpose(), noise.increments.row(k).transpose());
    traj.states.row(k + 1) = stepper.state().transpose();
    traj.time[k + 1] = (k + 1) * grid.spacing();
  }
  return traj;
}

namespace {

void write_header(std::ostream& os, const Trajectory& t, bool with_path) {
  if (with_path) os << "path,";
  os << "t";
  for (Eigen::Index i = 0; i < t.states.cols(); ++i) os << ",y_" << i + 1;
  for (Eigen::Index i = 0; i < t.controls.cols(); ++i) os << ",u_" << i + 1;
  os << '\n';
}

void write_rows(std::ostream& os, const Trajectory& t, const std::string& prefix) {
  for (std::size_t k = 0; k < t.time.size(); ++k) {
    os << prefix;
    write_number(os, t.time[k]);
    for (Eigen::Index i = 0; i < t.states.cols(); ++i) {
      os << ',';
      write_number(os, t.states(static_cast<Eigen::Index>(k), i));
    }
    // Final node repeats the last held control.
    const auto row = std::min<Eigen::Index>(static_cast<Eigen::Index>(k), t.controls.rows() - 1);
    for (Eigen::Index i = 0; i < t.controls.cols(); ++i) {
      os << ',';
      write_number(os, row >= 0 ? t.controls(row, i) : 0.0);
    }
    os << '\n';
  }
}

}  // namespace

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  write_header(os, traj, false);
  write_rows(os, traj, "");
}

void write_batch_csv(std::ostream& os, const std::vector<Trajectory>& batch) {
  if (batch.empty()) return;
  write_header(os, batch.front(), true);
  for (std::size_t p = 0; p < batch.size(); ++p) write_rows(os, batch[p], std::to_string(p) + ",");
}

}  // namespace sdde
