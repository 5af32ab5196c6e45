#include <algorithm>
#include <cmath>
#include <limits>

#include "sdde/value.hpp"
#include "value_internal.hpp"

namespace sdde {

namespace {

constexpr const char* kModule = "value";

}  // namespace

Vec features(const SegmentGrid& grid, const LiftedState& x, int moments) {
  const int n = static_cast<int>(x.x0.size());
  Vec f(feature_count(n, moments));
  f.head(n) = x.x0;
  const double d = -grid.node(0);
  const Vec& w = grid.weights();
  for (int i = 0; i < moments; ++i) {
    Vec acc = Vec::Zero(n);
    for (int j = 0; j < grid.nodes(); ++j) {
      const double s = (grid.node(j) + d) / d;
      acc += w(j) * std::pow(s, i) * x.x1.row(j).transpose();
    }
    f.segment(n + i * n, n) = acc;
  }
  return f;
}

int feature_count(int n, int moments) { return n * (1 + moments); }

LiftedState feature_gradient(const SegmentGrid& grid, int n, int moments, int k) {
  if (k < 0 || k >= feature_count(n, moments)) throw Error(ErrorKind::InvalidArgument, kModule, "feature index");
  LiftedState g = LiftedState::zero(grid, n);
  if (k < n) {
    g.x0(k) = 1.0;
    return g;
  }
  const int i = (k - n) / n;
  const int r = (k - n) % n;
  const double d = -grid.node(0);
  for (int j = 0; j < grid.nodes(); ++j) g.x1(j, r) = std::pow((grid.node(j) + d) / d, i);
  return g;
}

FeedbackPolicy FeedbackPolicy::constant(std::size_t index) {
  return {[index](const Vec&) { return index; }, 0};
}

FeedbackPolicy FeedbackPolicy::threshold(int component, double level, std::size_t below, std::size_t above) {
  return {[=](const Vec& f) { return f(component) < level ? below : above; }, 0};
}

namespace detail {

CellWeights cell_weights(double rho, double dt) {
  const double e = std::exp(-rho * dt);
  const double total = rho > 0.0 ? -std::expm1(-rho * dt) / rho : dt;
  const double first = rho > 0.0 ? (1.0 - e * (1.0 + rho * dt)) / (rho * rho) : 0.5 * dt * dt;
  const double b = first / dt;
  return {total - b, b};
}

const Vec& policy_control(const SddeModel& model, const FeedbackPolicy& policy, const Vec& feats) {
  const std::size_t i = policy.rule(feats);
  if (i >= model.controls().size()) throw Error(ErrorKind::ControlOutOfSet, kModule, "policy left the lattice");
  return model.controls()[i];
}

void require_discount(const Problem& problem) {
  if (!(problem.cost.discount > problem.rho0)) {
    throw Error(ErrorKind::DiscountTooSmall, kModule, "discount must exceed rho0");
  }
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double std_error_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace detail

namespace {

struct PathOutcome {
  double cost = 0.0;
  std::vector<double> moment;  // |Y0(t_k)|^m
};

ValueEstimate summarize(const Problem& problem, const std::vector<PathOutcome>& out, double x_norm, double T,
                        double h) {
  const double rho = problem.cost.discount;
  const double m = problem.cost.exponent;
  const double lambda = 0.5 * (rho + problem.rho0);
  std::vector<double> costs;
  costs.reserve(out.size());
  for (const auto& o : out) costs.push_back(o.cost);
  ValueEstimate est;
  est.mean = detail::mean_of(costs);
  est.std_error = detail::std_error_of(costs);
  est.paths = static_cast<int>(out.size());
  est.horizon = T;
  const double base = 1.0 + std::pow(x_norm, m);
  const std::size_t steps = out.front().moment.size();
  for (std::size_t k = 0; k < steps; ++k) {
    double acc = 0.0;
    for (const auto& o : out) acc += o.moment[k];
    acc /= static_cast<double>(out.size());
    est.fitted_c = std::max(est.fitted_c, acc * std::exp(-lambda * h * static_cast<double>(k)) / base);
  }
  est.tail_bound = problem.cost.growth_constant * (1.0 + est.fitted_c) * base * std::exp(-(rho - lambda) * T) /
                   (rho - lambda);
  return est;
}

}  // namespace

ValueEstimate evaluate_policy(const Problem& problem, const LiftedState& x, const FeedbackPolicy& policy, double T,
                              int paths, std::uint64_t seed, int workers) {
  detail::require_discount(problem);
  if (paths < 1) throw Error(ErrorKind::InvalidArgument, kModule, "need at least one path");
  const SddeModel& model = problem.model;
  const SegmentGrid& g = model.grid();
  const int steps = g.steps_for(T, kModule);
  const double h = g.spacing();
  const double rho = problem.cost.discount;
  const double m = problem.cost.exponent;
  const auto w = detail::cell_weights(rho, h);
  std::vector<PathOutcome> out(static_cast<std::size_t>(paths));
  for_each_index(out.size(), workers, [&](std::size_t i) {
    const auto noise = sample_brownian(seed, i, h, T, model.q());
    MildStepper st(model, x);
    PathOutcome& o = out[i];
    o.moment.reserve(static_cast<std::size_t>(steps) + 1);
    for (int k = 0; k < steps; ++k) {
      const Vec y0 = st.state().x0;
      o.moment.push_back(std::pow(y0.norm(), m));
      const Vec& u = detail::policy_control(model, policy, features(g, st.state(), policy.moments));
      st.advance(u, noise.increments.row(k).transpose());
      o.cost += std::exp(-rho * k * h) *
                (w.a * problem.cost.running(y0, u) + w.b * problem.cost.running(st.state().x0, u));
    }
    o.moment.push_back(std::pow(st.state().x0.norm(), m));
  });
  return summarize(problem, out, norm(g, x), T, h);
}

ValueEstimate evaluate_policy(const Problem& problem, const HistoryPair& history, const FeedbackPolicy& policy,
                              double T, int paths, std::uint64_t seed, Route route, int workers) {
  const SddeModel& model = problem.model;
  const LiftedState x = structural_state(model, history);
  if (route == Route::Lift) return evaluate_policy(problem, x, policy, T, paths, seed, workers);
  detail::require_discount(problem);
  if (paths < 1) throw Error(ErrorKind::InvalidArgument, kModule, "need at least one path");
  const SegmentGrid& g = model.grid();
  const int steps = g.steps_for(T, kModule);
  const double h = g.spacing();
  const double rho = problem.cost.discount;
  const double m = problem.cost.exponent;
  const auto w = detail::cell_weights(rho, h);
  const Vec last_delta = history.delta.row(history.delta.rows() - 1).transpose();
  std::vector<PathOutcome> out(static_cast<std::size_t>(paths));
  for_each_index(out.size(), workers, [&](std::size_t i) {
    const auto noise = sample_brownian(seed, i, h, T, model.q());
    SddeStepper st(model, history);
    Vec last_u = last_delta;
    PathOutcome& o = out[i];
    o.moment.reserve(static_cast<std::size_t>(steps) + 1);
    for (int k = 0; k < steps; ++k) {
      const Vec y0 = st.state();
      o.moment.push_back(std::pow(y0.norm(), m));
      Vec feats;
      if (policy.moments == 0) {
        feats = y0;
      } else {
        const auto xs = structural_state(model, y0, st.state_segment(), st.control_segment(last_u));
        feats = features(g, xs, policy.moments);
      }
      const Vec& u = detail::policy_control(model, policy, feats);
      st.advance(u, noise.increments.row(k).transpose());
      o.cost += std::exp(-rho * k * h) * (w.a * problem.cost.running(y0, u) + w.b * problem.cost.running(st.state(), u));
      last_u = u;
    }
    o.moment.push_back(std::pow(st.state().norm(), m));
  });
  return summarize(problem, out, norm(g, x), T, h);
}

namespace {

struct BruteSearch {
  const Problem& problem;
  int block_steps;
  int decisions;
  double h;
  detail::CellWeights w;
  Vec zero_dw;
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> best_seq;
  std::vector<std::size_t> seq;

  void run(const SddeStepper& from, int level, double acc) {
    if (level == decisions) {
      if (acc < best) {
        best = acc;
        best_seq = seq;
      }
      return;
    }
    const auto& lattice = problem.model.controls();
    const double rho = problem.cost.discount;
    for (std::size_t i = 0; i < lattice.size(); ++i) {
      const Vec& u = lattice[i];
      SddeStepper st = from;
      double c = acc;
      for (int s = 0; s < block_steps; ++s) {
        const double t = st.time();
        const Vec y0 = st.state();
        st.advance(u, zero_dw);
        c += std::exp(-rho * t) * (w.a * problem.cost.running(y0, u) + w.b * problem.cost.running(st.state(), u));
      }
      seq.push_back(i);
      run(st, level + 1, c);
      seq.pop_back();
    }
  }
};

}  // namespace

BruteForceResult brute_force_value(const Problem& problem, const HistoryPair& history, double T, int decisions) {
  const SddeModel& model = problem.model;
  if (decisions < 1) throw Error(ErrorKind::InvalidArgument, kModule, "need at least one decision");
  const auto& lattice = model.controls();
  if (lattice.size() == 0) throw Error(ErrorKind::EmptyControlLattice, kModule, "control lattice is empty");
  for (const Vec& u : lattice.points()) {
    if (model.control_diffusion(u).cwiseAbs().maxCoeff() != 0.0) {
      throw Error(ErrorKind::InvalidArgument, kModule, "brute force needs sigma0 = 0 on the lattice");
    }
  }
  if (std::pow(static_cast<double>(lattice.size()), decisions) > 1e7) {
    throw Error(ErrorKind::SearchTooLarge, kModule, "lattice size^decisions exceeds 1e7");
  }
  const int steps = model.grid().steps_for(T, kModule);
  if (steps % decisions != 0) {
    throw Error(ErrorKind::HorizonNotAligned, kModule, "decision blocks must be whole grid steps");
  }
  const double h = model.grid().spacing();
  BruteSearch search{problem, steps / decisions, decisions, h, detail::cell_weights(problem.cost.discount, h),
                     Vec::Zero(model.q()), std::numeric_limits<double>::infinity(), {}, {}};
  search.run(SddeStepper(model, history), 0, 0.0);
  return {search.best, search.best_seq};
}

}  // namespace sdde
