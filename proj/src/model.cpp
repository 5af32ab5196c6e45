#include "sdde/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace sdde {

namespace {

constexpr const char* kModule = "model";

[[noreturn]] void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, kModule, msg); }

}  // namespace

SegmentGrid::SegmentGrid(double delay, int intervals) : delay_(delay), intervals_(intervals) {
  if (!(delay > 0.0) || !std::isfinite(delay)) {
    fail(ErrorKind::NonPositiveDelay, "delay must be positive, got " + std::to_string(delay));
  }
  if (intervals < 2) {
    fail(ErrorKind::InvalidGrid, "grid needs at least 2 subintervals, got " + std::to_string(intervals));
  }
  spacing_ = delay / intervals;
  weights_ = Vec::Constant(intervals + 1, spacing_);
  weights_(0) = weights_(intervals) = 0.5 * spacing_;
}

double SegmentGrid::integrate(const Eigen::Ref<const Vec>& values) const {
  if (values.size() != nodes()) fail(ErrorKind::GridMismatch, "grid function has wrong node count");
  return weights_.dot(values);
}

Vec SegmentGrid::integrate_columns(const GridFn& values) const {
  if (values.rows() != nodes()) fail(ErrorKind::GridMismatch, "grid function has wrong node count");
  return values.transpose() * weights_;
}

double SegmentGrid::inner(const GridFn& f, const GridFn& g) const {
  if (f.rows() != nodes() || g.rows() != nodes() || f.cols() != g.cols()) {
    fail(ErrorKind::GridMismatch, "grid functions do not share the grid");
  }
  return (f.array() * g.array()).rowwise().sum().matrix().dot(weights_);
}

int SegmentGrid::steps_for(double t, const char* module) const {
  const double ratio = t / spacing_;
  const double rounded = std::round(ratio);
  if (t < 0.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    std::ostringstream os;
    os << "time " << t << " is not a nonnegative multiple of the grid spacing " << spacing_;
    throw Error(ErrorKind::TimeNotAligned, module, os.str());
  }
  return static_cast<int>(rounded);
}

DelayKernelGrid DelayKernelGrid::sample(const SegmentGrid& grid, int rows, int cols, const KernelFn& fn) {
  DelayKernelGrid k;
  k.rows_ = rows;
  k.cols_ = cols;
  k.nodes_ = grid.nodes();
  k.values_ = Mat::Zero(static_cast<Eigen::Index>(rows) * grid.nodes(), cols);
  if (!fn) return k;
  for (int j = 0; j < grid.nodes(); ++j) {
    const Mat v = fn(grid.node(j));
    if (v.rows() != rows || v.cols() != cols) {
      fail(ErrorKind::InvalidArgument, "kernel returned a matrix of the wrong shape");
    }
    k.values_.block(j * rows, 0, rows, cols) = v;
  }
  k.zero_ = k.values_.isZero(0.0);
  return k;
}

Vec DelayKernelGrid::row_l2_norms(const SegmentGrid& grid) const {
  Vec out = Vec::Zero(rows_);
  for (int j = 0; j < nodes_; ++j) {
    out += grid.weights()(j) * values_.block(j * rows_, 0, rows_, cols_).rowwise().squaredNorm();
  }
  return out.cwiseSqrt();
}

double DelayKernelGrid::l2_norm_squared(const SegmentGrid& grid) const {
  double total = 0.0;
  for (int j = 0; j < nodes_; ++j) {
    total += grid.weights()(j) * values_.block(j * rows_, 0, rows_, cols_).squaredNorm();
  }
  return total;
}

Vec DelayKernelGrid::integrate_against(const SegmentGrid& grid, const GridFn& segment) const {
  if (segment.rows() != nodes_ || segment.cols() != cols_ || grid.nodes() != nodes_) {
    fail(ErrorKind::GridMismatch, "segment and kernel do not share the grid");
  }
  Vec out = Vec::Zero(rows_);
  if (zero_) return out;
  for (int j = 0; j < nodes_; ++j) {
    out.noalias() += grid.weights()(j) * (values_.block(j * rows_, 0, rows_, cols_) * segment.row(j).transpose());
  }
  return out;
}

ControlSet::ControlSet(std::vector<Vec> points, Vec lower, Vec upper)
    : points_(std::move(points)), lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size() || (lower_.array() > upper_.array()).any()) {
    fail(ErrorKind::InvalidArgument, "control bounding box is malformed");
  }
  for (const auto& u : points_) {
    if (!contains(u)) fail(ErrorKind::ControlOutOfSet, "lattice point outside the control bounding box");
  }
}

ControlSet ControlSet::box(const Vec& lower, const Vec& upper, int points_per_axis) {
  if (points_per_axis < 1) fail(ErrorKind::EmptyControlLattice, "control lattice needs at least one point per axis");
  const int p = static_cast<int>(lower.size());
  std::vector<Vec> pts;
  std::vector<int> idx(p, 0);
  while (true) {
    Vec u(p);
    for (int i = 0; i < p; ++i) {
      const double s = points_per_axis == 1 ? 0.0 : static_cast<double>(idx[i]) / (points_per_axis - 1);
      u(i) = lower(i) + s * (upper(i) - lower(i));
    }
    pts.push_back(u);
    int axis = 0;
    while (axis < p && ++idx[axis] == points_per_axis) idx[axis++] = 0;
    if (axis == p) break;
  }
  return ControlSet(std::move(pts), lower, upper);
}

double ControlSet::bound() const {
  return lower_.cwiseAbs().cwiseMax(upper_.cwiseAbs()).norm();
}

bool ControlSet::contains(const Vec& u, double tol) const {
  if (u.size() != lower_.size()) return false;
  return ((u.array() >= lower_.array() - tol) && (u.array() <= upper_.array() + tol)).all();
}

SddeModel::SddeModel(ModelSpec spec, ControlSet controls)
    : spec_(std::move(spec)), controls_(std::move(controls)), grid_(spec_.delay, spec_.intervals) {
  if (spec_.n < 1 || spec_.p < 1 || spec_.q < 1) fail(ErrorKind::InvalidArgument, "dimensions must be positive");
  if (controls_.size() == 0) fail(ErrorKind::EmptyControlLattice, "control lattice is empty");
  if (controls_.dim() != spec_.p) fail(ErrorKind::InvalidArgument, "control lattice dimension differs from p");
  if (spec_.linear) {
    const auto& lin = *spec_.linear;
    if (lin.a0.rows() != spec_.n || lin.a0.cols() != spec_.n || !lin.drift || !lin.diffusion) {
      fail(ErrorKind::InvalidArgument, "linear dynamics are incomplete");
    }
  } else if (!spec_.drift || !spec_.diffusion) {
    fail(ErrorKind::InvalidArgument, "drift and diffusion are required");
  }
  state_kernel_ = DelayKernelGrid::sample(grid_, spec_.n, spec_.n, spec_.state_kernel);
  control_kernel_ = DelayKernelGrid::sample(grid_, spec_.n, spec_.p, spec_.control_kernel);
}

const LinearDynamics& SddeModel::linear(const char* what) const {
  if (!spec_.linear) throw Error(ErrorKind::NotLinearModel, kModule, std::string(what) + " requires a linear model");
  return *spec_.linear;
}

Vec SddeModel::drift(const Vec& y, const Vec& u) const {
  if (spec_.linear) return spec_.linear->a0 * y + spec_.linear->drift(u);
  return spec_.drift(y, u);
}

Mat SddeModel::diffusion(const Vec& y, const Vec& u) const {
  if (spec_.linear) return spec_.linear->diffusion(u);
  return spec_.diffusion(y, u);
}

const Mat& SddeModel::a0() const { return linear("a0").a0; }
Vec SddeModel::control_drift(const Vec& u) const { return linear("control_drift").drift(u); }
Mat SddeModel::control_diffusion(const Vec& u) const { return linear("control_diffusion").diffusion(u); }

SddeModel SddeModel::with_intervals(int intervals) const {
  ModelSpec s = spec_;
  s.intervals = intervals;
  return SddeModel(std::move(s), controls_);
}

double rho_zero(double growth, double exponent) {
  if (growth < 0.0 || exponent < 0.0) fail(ErrorKind::InvalidArgument, "rho_zero needs C >= 0 and m >= 0");
  if (exponent == 0.0) return 0.0;
  if (exponent < 2.0) return growth * exponent + 0.5 * growth * growth * exponent;
  return growth * exponent + 0.5 * growth * growth * exponent * (exponent - 1.0);
}

GrowthExponentBound admissible_growth_k(double growth, double discount) {
  if (!(discount > 0.0) || growth < 0.0) fail(ErrorKind::InvalidArgument, "admissible_growth_k needs rho > 0, C >= 0");
  if (growth == 0.0) return {true, std::numeric_limits<double>::infinity()};
  const double c = growth;
  const double ratio = discount / (c + 0.5 * c * c);
  if (ratio <= 2.0) return {false, ratio};
  // Positive root of C k + C^2 k (k-1) / 2 = rho.
  const double b = c - 0.5 * c * c;
  const double k = (-b + std::sqrt(b * b + 2.0 * c * c * discount)) / (c * c);
  return {false, k};
}

namespace {

// Dyadic tensor lattice on [-R, R]^n.
std::vector<Vec> validation_lattice(int n, int level, double radius) {
  const int per_axis = (1 << level) + 1;
  std::vector<Vec> pts;
  std::vector<int> idx(n, 0);
  while (true) {
    Vec y(n);
    for (int i = 0; i < n; ++i) y(i) = -radius + 2.0 * radius * idx[i] / (per_axis - 1);
    pts.push_back(y);
    int axis = 0;
    while (axis < n && ++idx[axis] == per_axis) idx[axis++] = 0;
    if (axis == n) break;
  }
  return pts;
}

int lattice_index(const std::vector<int>& idx, int per_axis) {
  int k = 0;
  for (int i = static_cast<int>(idx.size()) - 1; i >= 0; --i) k = k * per_axis + idx[i];
  return k;
}

}  // namespace

ValidationReport validate_model(const ModelConfig& config) {
  ValidationReport report;
  auto add = [&](ErrorKind kind, std::string field, std::string msg) {
    report.violations.push_back({kind, std::move(field), std::move(msg)});
  };

  std::optional<SddeModel> model;
  try {
    model.emplace(config.model, config.controls);
  } catch (const Error& e) {
    const char* field = e.kind() == ErrorKind::NonPositiveDelay ? "grid.d"
                         : e.kind() == ErrorKind::InvalidGrid   ? "grid.K"
                                                                : "model";
    add(e.kind(), field, e.what());
    return report;
  }
  if (!config.cost.running) {
    add(ErrorKind::InvalidArgument, "cost.running", "running cost is missing");
    return report;
  }

  const auto& grid = model->grid();
  const int n = model->n();
  const double L = config.model.lipschitz;
  const double C = config.model.growth;
  constexpr double slack = 1e-9;

  for (const auto* k : {&model->state_kernel(), &model->control_kernel()}) {
    const Vec norms = k->row_l2_norms(grid);
    if (!norms.allFinite()) {
      add(ErrorKind::GrowthViolated, k == &model->state_kernel() ? "model.a1" : "model.p1",
          "kernel row is not square integrable on the grid");
    }
  }

  const int level = std::max(1, config.validation_level);
  const int per_axis = (1 << level) + 1;
  const auto lattice = validation_lattice(n, level, config.validation_radius);
  const double spacing = 2.0 * config.validation_radius / (per_axis - 1);

  bool drift_growth = false, diff_growth = false, drift_lip = false, diff_lip = false, cost_growth = false;
  const std::vector<double> radii{1.0, 2.0, 5.0, config.validation_radius};
  std::vector<double> modulus(radii.size(), 0.0);

  for (const auto& u : model->controls().points()) {
    std::vector<Vec> b(lattice.size());
    std::vector<Mat> s(lattice.size());
    std::vector<double> l(lattice.size());
    for (std::size_t i = 0; i < lattice.size(); ++i) {
      const Vec& y = lattice[i];
      b[i] = model->drift(y, u);
      s[i] = model->diffusion(y, u);
      l[i] = config.cost.running(y, u);
      const double bound = C * (1.0 + y.norm());
      const double gb = b[i].norm() / bound;
      const double gs = s[i].norm() / bound;
      report.max_growth_ratio = std::max({report.max_growth_ratio, gb, gs});
      if (!std::isfinite(gb) || gb > 1.0 + slack) drift_growth = true;
      if (!std::isfinite(gs) || gs > 1.0 + slack) diff_growth = true;
      const double cost_bound = config.cost.growth_constant * (1.0 + std::pow(y.norm(), config.cost.exponent));
      if (!std::isfinite(l[i]) || std::abs(l[i]) > cost_bound * (1.0 + slack)) cost_growth = true;
    }
    // Adjacent pairs along each axis; a coarser lattice's pairs are unions of these.
    std::vector<int> idx(n, 0);
    for (std::size_t i = 0; i < lattice.size(); ++i) {
      int rem = static_cast<int>(i);
      for (int a = 0; a < n; ++a) {
        idx[a] = rem % per_axis;
        rem /= per_axis;
      }
      for (int a = 0; a < n; ++a) {
        if (idx[a] + 1 >= per_axis) continue;
        auto next = idx;
        ++next[a];
        const auto j = static_cast<std::size_t>(lattice_index(next, per_axis));
        const double rb = (b[j] - b[i]).norm() / spacing;
        const double rs = (s[j] - s[i]).norm() / spacing;
        report.max_lipschitz_ratio = std::max({report.max_lipschitz_ratio, rb / L, rs / L});
        if (rb > L * (1.0 + slack)) drift_lip = true;
        if (rs > L * (1.0 + slack)) diff_lip = true;
        const double r = std::max(lattice[i].norm(), lattice[j].norm());
        for (std::size_t k = 0; k < radii.size(); ++k) {
          if (r <= radii[k]) modulus[k] = std::max(modulus[k], std::abs(l[j] - l[i]));
        }
      }
    }
  }
  if (drift_growth) add(ErrorKind::GrowthViolated, "model.drift", "|b0(y,u)| exceeds C(1+|y|) on the validation lattice");
  if (diff_growth) add(ErrorKind::GrowthViolated, "model.diffusion", "|sigma0(y,u)| exceeds C(1+|y|) on the validation lattice");
  if (drift_lip) add(ErrorKind::LipschitzViolated, "model.drift", "b0 difference quotient exceeds L");
  if (diff_lip) add(ErrorKind::LipschitzViolated, "model.diffusion", "sigma0 difference quotient exceeds L");
  if (cost_growth) add(ErrorKind::GrowthViolated, "cost.running", "|l(z,u)| exceeds K(1+|z|^m) on the validation lattice");
  for (std::size_t k = 0; k < radii.size(); ++k) report.cost_modulus.push_back({radii[k], modulus[k]});

  if (C < 0.0 || config.cost.exponent < 0.0) {
    add(ErrorKind::InvalidArgument, "cost.m", "growth constants must be nonnegative");
    return report;
  }
  report.rho0 = rho_zero(C, config.cost.exponent);
  if (!(config.cost.discount > report.rho0)) {
    std::ostringstream os;
    os << "discount rho = " << config.cost.discount << " must exceed rho0 = " << report.rho0;
    add(ErrorKind::DiscountTooSmall, "cost.rho", os.str());
  }
  if (report.ok()) report.problem = Problem{*model, config.cost, report.rho0};
  return report;
}

Problem validated_problem(const ModelConfig& config) {
  auto report = validate_model(config);
  if (!report.ok()) {
    const auto& v = report.violations.front();
    throw Error(v.kind, kModule, v.field + ": " + v.message);
  }
  return std::move(*report.problem);
}

HistoryPair constant_history(const SddeModel& model, const Vec& eta0, const Vec& eta1_value,
                             const Vec& delta_value) {
  const int K = model.grid().intervals();
  HistoryPair h{eta0, GridFn(K + 1, model.n()), GridFn(K, model.p())};
  h.eta1.rowwise() = eta1_value.transpose();
  h.delta.rowwise() = delta_value.transpose();
  check_history(model, h);
  return h;
}

HistoryPair sample_history(const SddeModel& model, const Vec& eta0,
                           const std::function<Vec(double)>& eta1,
                           const std::function<Vec(double)>& delta) {
  const auto& g = model.grid();
  HistoryPair h{eta0, GridFn(g.nodes(), model.n()), GridFn(g.intervals(), model.p())};
  for (int j = 0; j < g.nodes(); ++j) h.eta1.row(j) = eta1(g.node(j)).transpose();
  for (int j = 0; j < g.intervals(); ++j) h.delta.row(j) = delta(g.node(j)).transpose();
  check_history(model, h);
  return h;
}

void check_history(const SddeModel& model, const HistoryPair& history) {
  const auto& g = model.grid();
  if (history.eta0.size() != model.n() || history.eta1.rows() != g.nodes() || history.eta1.cols() != model.n() ||
      history.delta.rows() != g.intervals() || history.delta.cols() != model.p()) {
    fail(ErrorKind::GridMismatch, "history does not match the model grid or dimensions");
  }
  for (int j = 0; j < history.delta.rows(); ++j) {
    if (!model.controls().contains(history.delta.row(j).transpose(), 1e-12)) {
      fail(ErrorKind::ControlOutOfSet, "initial control segment leaves the control bounding set");
    }
  }
}

}  // namespace sdde
