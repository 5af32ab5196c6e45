#pragma once

#include <string>

#include "sdde/model.hpp"

namespace sdde {

// Goodwill model: dy = [a0 y + b0 u + int a1 y + int p1 u] dt + (sigma0 + gamma0 u) dW,
// l(z, u) = h u^2 - g z on U = [0, ubar].
struct AdvertisingParams {
  double delay = 1.0;
  int intervals = 32;
  double a0 = -0.5;
  double b0 = 1.0;
  double a1 = -0.2;    // constant forgetting kernel
  double p1_mass = 1.0;  // triangular lag density on [-d, 0], peak at -d/2
  double sigma0 = 0.1;
  double gamma0 = 0.1;
  double ubar = 1.0;
  int lattice_points = 5;
  double rho = 2.0;
  double h = 1.0;
  double g = 1.0;
  double lipschitz = 1.0;
  double growth = 1.0;
  double cost_constant = 1.0;
  double cost_exponent = 1.0;
  double eta0 = 1.0;    // constant initial history
  double delta0 = 0.5;  // constant initial control history
};

// Capital with time to build: dy = [b0 u + int p1 u] dt + (s0 + s1 u) dW,
// l(z, u) = c u^2 - f z on U = [0, ubar].
struct TimeToBuildParams {
  double delay = 1.0;
  int intervals = 32;
  double b0 = 0.5;
  double p1 = 1.0;  // constant lag density
  double s0 = 0.1;
  double s1 = 0.1;
  double ubar = 1.0;
  int lattice_points = 5;
  double rho = 2.0;
  double c = 1.0;
  double f = 0.5;
  double lipschitz = 1.0;
  double growth = 1.0;
  double cost_constant = 1.0;
  double cost_exponent = 1.0;
  double eta0 = 1.0;
  double delta0 = 0.5;
};

// Scalar linear model with constant kernels; the all-zero default is the
// trivial transport model.
struct LinearParams {
  double delay = 1.0;
  int intervals = 16;
  double a0 = 0.0;
  double b0 = 0.0;
  double a1 = 0.0;
  double p1 = 0.0;
  double sigma0 = 0.0;
  double gamma0 = 0.0;
  double ulo = 0.0;
  double uhi = 1.0;
  int lattice_points = 3;
  double rho = 2.0;
  double cost_state = 0.0;    // l = cost_state z + cost_control u^2 + cost_const
  double cost_control = 0.0;
  double cost_const = 0.0;
  double lipschitz = 1.0;
  double growth = 1.0;
  double cost_constant = 1.0;
  double cost_exponent = 1.0;
  double eta0 = 1.0;
  double delta0 = 0.0;
};

struct Scenario {
  std::string name;
  Problem problem;
  HistoryPair history;
};

// Validated; SignConstraintViolated, DiscountTooSmall and the validation errors.
Problem advertising_model(const AdvertisingParams& params);
Problem time_to_build_model(const TimeToBuildParams& params);
Problem linear_model(const LinearParams& params);

Scenario advertising_scenario(const AdvertisingParams& params);
Scenario time_to_build_scenario(const TimeToBuildParams& params);
Scenario linear_scenario(const LinearParams& params);

}  // namespace sdde
