#pragma once

#include "dhem/types.h"

#include <Eigen/Dense>

#include <concepts>
#include <optional>
#include <span>
#include <vector>

namespace dhem {

struct MStepOptions {
  double xi = 0.0;
  // Constrained variants keep candidates inside the barrier's feasible set
  // and verify the GEM inequality with backtracking damping.
  bool constrained = false;
  std::span<const double> damping_grid;
};

template <class Params>
struct MStepResult {
  Params candidate;
  bool rejected = false;  // no damped candidate was feasible and GEM-satisfying
  double alpha = 1.0;
};

// Capabilities a discrete-latent mixture model exposes to the drivers.
//   log_joint(theta)         n x K table of log P(x_i, z_i = k | theta)
//   row_weights()            multiplicity of each row
//   barrier(theta)           B(theta), nullopt outside the feasible set
//   is_feasible / in_domain  constraint set / natural parameter space
//   m_step(theta0, Z, opts)  candidate maximizing Q_r + xi B (or GEM step)
//   xi_init(theta0, Z0, tau) model-specific initial barrier weight
//   surrogate_gradient       dQ_r/d(constrained coordinates) at theta
//   param_distance           max absolute coordinate change
template <class M>
concept LatentModel = requires(const M& m, const typename M::Params& p, const Responsibilities& z,
                               const MStepOptions& opt, double tau) {
  { m.log_joint(p) } -> std::convertible_to<Eigen::MatrixXd>;
  { m.row_weights() } -> std::convertible_to<const Eigen::VectorXd&>;
  { m.barrier(p) } -> std::same_as<std::optional<double>>;
  { m.is_feasible(p) } -> std::same_as<bool>;
  { m.in_domain(p) } -> std::same_as<bool>;
  { m.m_step(p, z, opt) } -> std::same_as<MStepResult<typename M::Params>>;
  { m.xi_init(p, z, tau) } -> std::same_as<double>;
  { m.surrogate_gradient(p, z) } -> std::same_as<std::vector<double>>;
  { m.param_distance(p, p) } -> std::same_as<double>;
};

}  // namespace dhem
