#pragma once

#include <cstddef>
#include <cstdint>

#include "sdde/lift.hpp"

namespace sdde {

// L(x, u) = l(x0, u). ControlOutOfSet when u is outside the control box.
double running_cost(const Problem& problem, const LiftedState& x, const Vec& u);

// f(u) = (b0(u), p1 u) as an element of X on the grid.
LiftedState control_injection(const SddeModel& model, const Vec& u);

struct HamiltonianQuery {
  LiftedState x;
  LiftedState r;
  Mat z00;  // n x n, symmetric
};

struct HamiltonianValue {
  double value = 0.0;
  std::size_t argmax = 0;  // lattice index; lowest index on ties
};

// H = -mu <x, r> + max over the lattice of
//     { -b0(u).r0 - <p1 u, r1> - 1/2 Tr[sigma0 sigma0^T Z00] - l(x0, u) }.
HamiltonianValue hamiltonian(const Problem& problem, double mu, const HamiltonianQuery& q);

// max(mu, sup_u |f(u)|_X, sup_u |sigma0(u)|_F)
double hamiltonian_constant(const Problem& problem, double mu);

struct LipschitzReport {
  int samples = 0;
  double constant = 0.0;
  double max_ratio = 0.0;  // LHS / RHS of the local Lipschitz bound
};

// Random x with |x| <= radius, r, q, Y, Z; checks
// |H(x, r+q, Y+Z) - H(x, r, Y)| <= C(1+|x|)|q| + C^2/2 (1+|x|)^2 |Z|.
LipschitzReport lipschitz_diagnostic(const Problem& problem, double mu, int samples, std::uint64_t seed,
                                     double radius = 5.0);

struct MonotonicityReport {
  int pairs = 0;
  int violations = 0;
  double max_increase = 0.0;  // max H(Z + P) - H(Z) over the pairs, P >= 0
};

// Random (x, r, Z) and PSD increments P = G G^T; H must not increase.
MonotonicityReport monotonicity_check(const Problem& problem, double mu, int pairs, std::uint64_t seed,
                                      double tol = 1e-12);

}  // namespace sdde
