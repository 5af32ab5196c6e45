#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sdde/operators.hpp"
#include "sdde/scenarios.hpp"
#include "sdde/value.hpp"

using namespace sdde;

namespace {

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::InvalidArgument;
}

Trajectory constant_run(const Scenario& sc, double u, double T, std::uint64_t path) {
  const auto& m = sc.problem.model;
  const double dt = m.grid().spacing();
  const int steps = m.grid().steps_for(T, "test");
  ControlPath c{Mat::Constant(steps, 1, u)};
  return simulate_sdde(m, sc.history, c, sample_brownian(4, path, dt, T, m.q()), T);
}

}  // namespace

TEST_CASE("sign constraints on the goodwill model") {
  auto bad = [](auto edit) {
    AdvertisingParams a;
    edit(a);
    return kind_of([&] { advertising_model(a); });
  };
  CHECK(bad([](AdvertisingParams& a) { a.a0 = 0.1; }) == ErrorKind::SignConstraintViolated);
  CHECK(bad([](AdvertisingParams& a) { a.b0 = -1.0; }) == ErrorKind::SignConstraintViolated);
  CHECK(bad([](AdvertisingParams& a) { a.a1 = 0.2; }) == ErrorKind::SignConstraintViolated);
  CHECK(bad([](AdvertisingParams& a) { a.p1_mass = -0.5; }) == ErrorKind::SignConstraintViolated);
  CHECK(bad([](AdvertisingParams& a) { a.sigma0 = -0.1; }) == ErrorKind::SignConstraintViolated);
  CHECK(bad([](AdvertisingParams& a) { a.gamma0 = -0.1; }) == ErrorKind::SignConstraintViolated);
  CHECK(bad([](AdvertisingParams& a) { a.ubar = 0.0; }) == ErrorKind::SignConstraintViolated);
  CHECK(bad([](AdvertisingParams& a) { a.h = -1.0; }) == ErrorKind::SignConstraintViolated);
  CHECK(bad([](AdvertisingParams& a) { a.rho = 1.0; }) == ErrorKind::DiscountTooSmall);
  CHECK_NOTHROW(advertising_model({}));
}

TEST_CASE("sign constraints on the time to build model") {
  auto bad = [](auto edit) {
    TimeToBuildParams t;
    edit(t);
    return kind_of([&] { time_to_build_model(t); });
  };
  CHECK(bad([](TimeToBuildParams& t) { t.b0 = -0.1; }) == ErrorKind::SignConstraintViolated);
  CHECK(bad([](TimeToBuildParams& t) { t.p1 = -1.0; }) == ErrorKind::SignConstraintViolated);
  CHECK(bad([](TimeToBuildParams& t) { t.s0 = -0.1; }) == ErrorKind::SignConstraintViolated);
  CHECK(bad([](TimeToBuildParams& t) { t.s1 = -0.5; }) == ErrorKind::SignConstraintViolated);
  CHECK(bad([](TimeToBuildParams& t) { t.c = -1.0; }) == ErrorKind::SignConstraintViolated);
  CHECK(bad([](TimeToBuildParams& t) { t.ubar = -1.0; }) == ErrorKind::SignConstraintViolated);
  CHECK_NOTHROW(time_to_build_model({}));
}

TEST_CASE("time to build: no investment keeps capital frozen") {
  TimeToBuildParams t;
  t.s0 = 0.0;
  t.s1 = 0.0;
  t.delta0 = 0.0;
  t.eta0 = 2.5;
  const auto sc = time_to_build_scenario(t);
  const auto traj = constant_run(sc, 0.0, 3.0, 0);
  for (int k = 0; k < traj.states.rows(); ++k) CHECK(traj.states(k, 0) == 2.5);
}

TEST_CASE("time to build: constant investment, linear growth once the lag has passed") {
  TimeToBuildParams t;
  t.s0 = 0.0;
  t.s1 = 0.0;
  t.delta0 = 0.0;
  const auto sc = time_to_build_scenario(t);
  const double u = 0.75, d = t.delay, T = 3.0;
  const double h = sc.problem.model.grid().spacing();
  const auto traj = constant_run(sc, u, T, 0);
  for (std::size_t k = 0; k < traj.time.size(); ++k) {
    const double s = traj.time[k];
    if (s < d) continue;
    // b0 u s from the direct term, p1 u (d^2/2 + d (s - d)) from the ramp-up of the lag integral
    const double expect = t.eta0 + u * t.b0 * s + t.p1 * u * (0.5 * d * d + d * (s - d));
    CHECK(std::abs(traj.states(static_cast<int>(k), 0) - expect) <= 2.0 * h * u * t.p1 * T);
  }
}

TEST_CASE("time to build: mean path with noise when the history already invests") {
  TimeToBuildParams t;
  t.delta0 = 0.6;
  const auto sc = time_to_build_scenario(t);
  const double u = 0.6, T = 2.0;
  const int paths = 2000;
  const auto first = constant_run(sc, u, T, 0);
  const auto last = static_cast<int>(first.time.size()) - 1;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < paths; ++i) {
    const double y = constant_run(sc, u, T, static_cast<std::uint64_t>(i)).states(last, 0);
    s += y;
    s2 += y * y;
  }
  const double mean = s / paths;
  const double se = std::sqrt((s2 / paths - mean * mean) / (paths - 1));
  const double expect = t.eta0 + u * (t.b0 + t.p1 * t.delay) * T;
  CHECK(std::abs(mean - expect) <= 3.0 * se + 1e-9);
}

TEST_CASE("zero goodwill cost gives value zero") {
  AdvertisingParams a;
  a.h = 0.0;
  a.g = 0.0;
  const auto sc = advertising_scenario(a);
  for (std::size_t i = 0; i < sc.problem.model.controls().size(); ++i) {
    const auto est = evaluate_policy(sc.problem, sc.history, FeedbackPolicy::constant(i), 2.0, 20, 5);
    CHECK(est.mean == 0.0);
  }
}

TEST_CASE("both builders validate and pass the certificate") {
  for (const auto& sc : {advertising_scenario({}), time_to_build_scenario({})}) {
    CAPTURE(sc.name);
    OperatorPack pack(sc.problem.model);
    const auto rep = weak_b_certificate(pack, 2000, 7);
    CHECK(rep.ok());
    CHECK_NOTHROW(require_certificate(rep));
    CHECK(sc.problem.cost.discount > sc.problem.rho0);
  }
}

TEST_CASE("larger direct effect lowers the goodwill cost under common noise") {
  double prev = 0.0;
  for (double b0 : {0.0, 0.25, 0.5, 1.0}) {
    AdvertisingParams a;
    a.b0 = b0;
    const auto sc = advertising_scenario(a);
    const auto est = evaluate_policy(sc.problem, sc.history, FeedbackPolicy::constant(3), 2.0, 100, 12);
    if (b0 > 0.0) CHECK(est.mean < prev);
    prev = est.mean;
  }
}
