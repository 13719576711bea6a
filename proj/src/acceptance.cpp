#include "dhem/acceptance.h"

#include "dhem/errors.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dhem {

bool acceptance_rule_1(double delta_dkl_value, double delta_bound) {
  if (!std::isfinite(delta_dkl_value) || !std::isfinite(delta_bound)) {
    throw std::invalid_argument("acceptance rule inputs must be finite");
  }
  return delta_dkl_value >= delta_bound;
}

BarrierRuleResult acceptance_rule_2_and_shrink(double delta_bound, double xi, double delta_barrier_abs) {
  if (delta_bound < 0.0) throw InvalidBound("KL lower bound must be nonnegative");
  if (xi < 0.0 || delta_barrier_abs < 0.0) throw std::invalid_argument("xi and |Delta B| must be nonnegative");
  if (delta_barrier_abs == 0.0 || delta_bound >= xi * delta_barrier_abs) return {false, xi};
  return {true, std::min(xi, delta_bound / delta_barrier_abs)};
}

double xi_init_generic(double grad_q_norm, double grad_b_norm, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau must lie in (0, 1)");
  if (grad_b_norm == 0.0) throw std::domain_error("barrier gradient vanishes; use a model-specific rule");
  return tau * grad_q_norm / grad_b_norm;
}

}  // namespace dhem
