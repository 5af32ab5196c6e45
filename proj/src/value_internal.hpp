#pragma once

#include <cstdint>
#include <vector>

#include "sdde/value.hpp"

namespace sdde::detail {

// Exponential weights of the two endpoint values over one cell starting at 0.
struct CellWeights {
  double a;
  double b;
};

CellWeights cell_weights(double rho, double dt);
const Vec& policy_control(const SddeModel& model, const FeedbackPolicy& policy, const Vec& feats);
void require_discount(const Problem& problem);
double mean_of(const std::vector<double>& v);
double std_error_of(const std::vector<double>& v);

struct BlockOutcome {
  double cost;  // discounted from the block start
  LiftedState state;
};

// Lifted run over the steps of `noise` under a constant control.
BlockOutcome run_block(const Problem& problem, const LiftedState& x, const Vec& u, const BrownianPath& noise);
std::uint64_t inner_path_id(int k, std::size_t i, int j, int paths);

struct LatticeMinimum {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t index = 0;
};

// min over the lattice of the mean of block cost + e^{-rho step} V_{k+1},
// common random numbers across controls.
LatticeMinimum lattice_minimum(const Problem& problem, const ValueModel& model, const LiftedState& x, int k, int paths,
                               std::uint64_t seed, std::size_t state_index);

}  // namespace sdde::detail
