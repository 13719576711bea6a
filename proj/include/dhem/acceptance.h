#pragma once

namespace dhem {

// First acceptance rule: Delta D_KL(theta0 || cand, r) >= delta(cand, theta0).
// Plain >= on the computed values; no slack.
bool acceptance_rule_1(double delta_dkl_value, double delta_bound);

struct BarrierRuleResult {
  bool shrunk = false;  // false: the rule held at the incoming xi
  double xi = 0.0;
};

// Second acceptance rule delta >= xi |Delta B|; when it fails the barrier
// weight becomes min(xi, delta / |Delta B|). Throws InvalidBound for delta < 0.
BarrierRuleResult acceptance_rule_2_and_shrink(double delta_bound, double xi, double delta_barrier_abs);

// tau * |grad Q| / |grad B|. Throws std::domain_error when |grad B| == 0.
double xi_init_generic(double grad_q_norm, double grad_b_norm, double tau);

}  // namespace dhem
