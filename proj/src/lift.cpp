#include "sdde/lift.hpp"

#include <cmath>
#include <limits>

namespace sdde {

namespace {

constexpr const char* kModule = "lift";

void require_grid(const SegmentGrid& grid, const GridFn& f, const char* what) {
  if (f.rows() != grid.nodes()) {
    throw Error(ErrorKind::GridMismatch, kModule, std::string(what) + " does not live on the model grid");
  }
}

}  // namespace

double inner(const SegmentGrid& grid, const LiftedState& x, const LiftedState& y) {
  return x.x0.dot(y.x0) + grid.inner(x.x1, y.x1);
}

double norm_squared(const SegmentGrid& grid, const LiftedState& x) { return inner(grid, x, x); }

GridFn structural_segment(const SddeModel& model, const GridFn& alpha1, const GridFn& beta) {
  const auto& g = model.grid();
  require_grid(g, alpha1, "state segment");
  require_grid(g, beta, "control segment");
  if (alpha1.cols() != model.n() || beta.cols() != model.p()) {
    throw Error(ErrorKind::GridMismatch, kModule, "segment dimensions differ from the model");
  }
  const int K = g.intervals();
  const int n = model.n();
  const double h = g.spacing();
  const auto& a1 = model.state_kernel();
  const auto& p1 = model.control_kernel();
  GridFn out = GridFn::Zero(K + 1, n);
  for (int j = 1; j <= K; ++j) {
    for (int i = 0; i <= j; ++i) {
      const double w = (i == 0 || i == j) ? 0.5 * h : h;
      const int lag = K + i - j;
      for (int r = 0; r < n; ++r) {
        double acc = 0.0;
        if (!a1.is_zero()) {
          for (int c = 0; c < n; ++c) acc += a1(i, r, c) * alpha1(lag, c);
        }
        if (!p1.is_zero()) {
          for (int c = 0; c < model.p(); ++c) acc += p1(i, r, c) * beta(lag, c);
        }
        out(j, r) += w * acc;
      }
    }
  }
  return out;
}

LiftedState structural_state(const SddeModel& model, const Vec& alpha0, const GridFn& alpha1, const GridFn& beta) {
  if (alpha0.size() != model.n()) throw Error(ErrorKind::GridMismatch, kModule, "alpha0 has the wrong dimension");
  return {alpha0, structural_segment(model, alpha1, beta)};
}

LiftedState structural_state(const SddeModel& model, const HistoryPair& history) {
  check_history(model, history);
  const int K = model.grid().intervals();
  GridFn alpha1 = history.eta1;
  alpha1.row(K) = history.eta0.transpose();
  GridFn beta(K + 1, model.p());
  beta.topRows(K) = history.delta;
  beta.row(K) = history.delta.row(K - 1);
  return structural_state(model, history.eta0, alpha1, beta);
}

LiftedState semigroup_apply(const SegmentGrid& grid, double t, const LiftedState& x) {
  require_grid(grid, x.x1, "x1");
  const int s = grid.steps_for(t, kModule);
  const int K = grid.intervals();
  const double h = grid.spacing();
  if (s == 0) return x;
  LiftedState out{x.x0, GridFn::Zero(x.x1.rows(), x.x1.cols())};
  const int first = std::max(0, K - s);
  for (int j = first; j <= K; ++j) {
    const double w = (j == first || j == K) ? 0.5 * h : h;
    out.x0 += w * x.x1.row(j).transpose();
  }
  for (int j = s; j <= K; ++j) out.x1.row(j) = x.x1.row(j - s);
  return out;
}

MildStepper::MildStepper(const SddeModel& model, LiftedState x) : model_(&model), state_(std::move(x)) {
  const auto& g = model.grid();
  require_grid(g, state_.x1, "x1");
  const int K = g.intervals();
  const int n = model.n();
  const int p = model.p();
  const double h = g.spacing();
  cell_p1_ = Mat::Zero(K * n, p);
  if (!model.control_kernel().is_zero()) {
    for (int i = 1; i <= K; ++i) {
      cell_p1_.block((i - 1) * n, 0, n, p) =
          0.5 * h * (model.control_kernel().at(i - 1) + model.control_kernel().at(i));
    }
  }
}

void MildStepper::transport(const Vec& y_old, const Vec& y_new, const Vec& u) {
  const int K = model_->grid().intervals();
  const int n = model_->n();
  const double hh = 0.5 * model_->grid().spacing();
  const auto& a1 = model_->state_kernel();
  const bool has_a1 = !a1.is_zero();
  const bool has_p1 = !model_->control_kernel().is_zero();
  auto& x1 = state_.x1;
  for (int j = K; j >= 1; --j) {
    x1.row(j) = x1.row(j - 1);
    if (has_a1) {
      for (int r = 0; r < n; ++r) {
        double acc = 0.0;
        for (int c = 0; c < n; ++c) acc += a1(j - 1, r, c) * y_old(c) + a1(j, r, c) * y_new(c);
        x1(j, r) += hh * acc;
      }
    }
    if (has_p1) x1.row(j).noalias() += (cell_p1_.block((j - 1) * n, 0, n, model_->p()) * u).transpose();
  }
  x1.row(0).setZero();
}

void MildStepper::advance(const Vec& u, const Eigen::Ref<const Vec>& dw) {
  const double h = model_->grid().spacing();
  const int K = model_->grid().intervals();
  const Vec y0 = state_.x0;
  const int n = model_->n();
  const Vec b0 = model_->drift(y0, u);
  const Vec noise = model_->diffusion(y0, u) * dw;
  const Vec now = state_.x1.row(K).transpose();
  // Heun predictor for Y1(t+h)(0); with zero sources this is the exact shift.
  const Vec pred = y0 + (b0 + now) * h + noise;
  Vec later = state_.x1.row(K - 1).transpose();
  const auto& a1 = model_->state_kernel();
  if (!a1.is_zero()) later += 0.5 * h * (a1.at(K - 1) * y0 + a1.at(K) * pred);
  if (!model_->control_kernel().is_zero()) later += cell_p1_.block((K - 1) * n, 0, n, model_->p()) * u;
  Vec next = y0 + (b0 + 0.5 * (now + later)) * h + noise;
  check_finite(next, step_ + 1, kModule);
  transport(y0, next, u);
  state_.x0 = std::move(next);
  ++step_;
}

void MildStepper::advance_forced(const Vec& u, const Vec& y0_next) {
  const Vec y0 = state_.x0;
  transport(y0, y0_next, u);
  state_.x0 = y0_next;
  ++step_;
}

AbstractTrajectory integrate_mild(const SddeModel& model, const LiftedState& x, const ControlPath& control,
                                  const BrownianPath& noise, double horizon) {
  const auto& g = model.grid();
  if (std::abs(noise.dt - g.spacing()) > 1e-12 * g.spacing()) {
    throw Error(ErrorKind::HorizonNotAligned, kModule, "Brownian time step must equal the grid spacing");
  }
  int steps = 0;
  try {
    steps = g.steps_for(horizon, kModule);
  } catch (const Error&) {
    throw Error(ErrorKind::HorizonNotAligned, kModule, "horizon is not a multiple of the time step");
  }
  if (noise.steps() < steps || control.steps() < steps) {
    throw Error(ErrorKind::HorizonNotAligned, kModule, "noise or control path shorter than the horizon");
  }
  AbstractTrajectory out;
  out.seed = noise.seed;
  out.path_index = noise.path_index;
  out.time.reserve(steps + 1);
  out.states.reserve(steps + 1);
  MildStepper st(model, x);
  out.time.push_back(0.0);
  out.states.push_back(st.state());
  for (int k = 0; k < steps; ++k) {
    st.advance(control.values.row(k).transpose(), noise.increments.row(k).transpose());
    out.time.push_back((k + 1) * g.spacing());
    out.states.push_back(st.state());
  }
  return out;
}

double fitted_order(const std::vector<double>& dts, const std::vector<double>& errors) {
  const std::size_t m = dts.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (!(errors[i] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    const double x = std::log(dts[i]), y = std::log(errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

namespace {

struct PathErrors {
  double sup_y = 0.0;
  double sup_segment = 0.0;
};

PathErrors compare_path(const SddeModel& model, const HistoryPair& hist, const LiftedState& x,
                        const ControlPath& control, const BrownianPath& noise, int steps) {
  const auto& g = model.grid();
  const int K = g.intervals();
  const int n = model.n();
  SddeStepper y(model, hist);
  MildStepper Y(model, x);
  Mat y0_path(steps + 1, n);
  y0_path.row(0) = x.x0.transpose();
  PathErrors e;
  const int every = std::max(1, K / 8);
  for (int k = 0; k <= steps; ++k) {
    if (k > 0) {
      const Vec u = control.values.row(k - 1).transpose();
      y.advance(u, noise.increments.row(k - 1).transpose());
      Y.advance(u, noise.increments.row(k - 1).transpose());
      y0_path.row(k) = Y.state().x0.transpose();
    }
    e.sup_y = std::max(e.sup_y, (y.state() - Y.state().x0).norm());
    if (k >= K && (k - K) % every == 0) {
      GridFn alpha(K + 1, n), beta(K + 1, model.p());
      for (int j = 0; j <= K; ++j) {
        const int i = k - K + j;
        if (i >= 0) {
          alpha.row(j) = y0_path.row(i);
        } else {
          alpha.row(j) = hist.eta1.row(K + i);
        }
        const int c = std::min(i, steps - 1);
        beta.row(j) = c >= 0 ? control.values.row(c) : hist.delta.row(K + c);
      }
      const GridFn diff = Y.state().x1 - structural_segment(model, alpha, beta);
      e.sup_segment = std::max(e.sup_segment, std::sqrt(g.inner(diff, diff)));
    }
  }
  return e;
}

}  // namespace

EquivalenceReport verify_equivalence(const SddeModel& base, const EquivalenceInput& input, std::uint64_t seed,
                                     int paths, double horizon, const std::vector<int>& refinements, int workers) {
  if (refinements.empty() || paths < 1) throw Error(ErrorKind::InvalidArgument, kModule, "nothing to verify");
  int finest = 1;
  for (int r : refinements) {
    if (r < 1) throw Error(ErrorKind::InvalidArgument, kModule, "refinement factors must be positive");
    finest = std::max(finest, r);
  }
  for (int r : refinements) {
    if (finest % r != 0) throw Error(ErrorKind::InvalidArgument, kModule, "refinements must divide the finest");
  }
  const int K0 = base.grid().intervals();
  const double h_fine = base.grid().delay() / (K0 * finest);

  std::vector<SddeModel> models;
  std::vector<HistoryPair> hists;
  std::vector<LiftedState> starts;
  std::vector<ControlPath> controls;
  std::vector<int> steps;
  for (int r : refinements) {
    models.push_back(base.with_intervals(K0 * r));
    const auto& m = models.back();
    hists.push_back(sample_history(m, input.eta0, input.eta1, input.delta));
    starts.push_back(structural_state(m, hists.back()));
    steps.push_back(m.grid().steps_for(horizon, kModule));
    controls.push_back(sampled_control(m.grid(), input.control, steps.back()));
  }

  const std::size_t L = refinements.size();
  std::vector<std::vector<PathErrors>> errs(L, std::vector<PathErrors>(paths));
  for_each_index(static_cast<std::size_t>(paths), workers, [&](std::size_t p) {
    const auto fine = sample_brownian(seed, p, h_fine, horizon, base.q());
    for (std::size_t l = 0; l < L; ++l) {
      const auto noise = fine.coarsen(finest / refinements[l]);
      errs[l][p] = compare_path(models[l], hists[l], starts[l], controls[l], noise, steps[l]);
    }
  });

  EquivalenceReport rep;
  std::vector<double> dts, ey, es;
  for (std::size_t l = 0; l < L; ++l) {
    EquivalenceLevel lev;
    lev.intervals = models[l].grid().intervals();
    lev.dt = models[l].grid().spacing();
    for (const auto& e : errs[l]) {
      lev.sup_error_y += e.sup_y;
      lev.sup_error_segment += e.sup_segment;
    }
    lev.sup_error_y /= paths;
    lev.sup_error_segment /= paths;
    rep.levels.push_back(lev);
    dts.push_back(lev.dt);
    ey.push_back(lev.sup_error_y);
    es.push_back(lev.sup_error_segment);
  }
  rep.monotone = true;
  for (std::size_t l = 1; l < L; ++l) {
    if (rep.levels[l].dt < rep.levels[l - 1].dt) rep.monotone &= ey[l] < ey[l - 1];
  }
  rep.fitted_order = fitted_order(dts, ey);
  rep.segment_order = fitted_order(dts, es);
  return rep;
}

}  // namespace sdde
