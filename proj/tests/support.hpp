#pragma once

#include "sdde/model.hpp"

namespace testsupport {

using sdde::Mat;
using sdde::Vec;

inline Vec v1(double x) { return Vec::Constant(1, x); }

// Scalar linear model: dy = [a0 y + bhat u + int a1 y + int p1 u] dt + (sigma + gamma u) dW.
inline sdde::ModelSpec scalar_spec(double d, int K, double a0, double bhat, sdde::KernelFn a1, sdde::KernelFn p1,
                                   double sigma, double gamma = 0.0) {
  sdde::ModelSpec s;
  s.delay = d;
  s.intervals = K;
  s.linear = sdde::LinearDynamics{Mat::Constant(1, 1, a0), [bhat](const Vec& u) { return Vec(bhat * u); },
                                  [sigma, gamma](const Vec& u) { return Mat::Constant(1, 1, sigma + gamma * u(0)); }};
  s.state_kernel = std::move(a1);
  s.control_kernel = std::move(p1);
  s.lipschitz = 10.0;
  s.growth = 10.0;
  return s;
}

inline sdde::KernelFn constant_kernel(double c) {
  if (c == 0.0) return {};
  return [c](double) { return Mat::Constant(1, 1, c); };
}

inline sdde::ControlSet interval(double lo, double hi, int points) { return sdde::ControlSet::box(v1(lo), v1(hi), points); }

}  // namespace testsupport
