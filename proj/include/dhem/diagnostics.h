#pragma once

// Numeric checks of the convergence and latent-effect behaviour of the
// drivers. Every probe sums exactly over the discrete latent states.

#include "dhem/model.h"
#include "dhem/types.h"

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace dhem {

struct ProbeReport {
  std::string name;
  std::vector<double> grid;
  std::vector<double> values;
  double statistic = 0.0;  // fitted slope, final gap or worst envelope increase
  std::string criterion;
  bool pass = false;
};

// CSV rows `probe,input,value,criterion,pass`, one per grid point plus a
// closing `summary` row carrying the statistic.
void write_probe_csv(std::ostream& out, std::span<const ProbeReport> reports, bool header = true);

// Indices t >= 1 with loglik[t] < loglik[t - 1] - tol.
std::vector<std::size_t> monotonicity_audit(std::span<const double> loglik, double tol = 1e-10);
std::vector<std::size_t> monotonicity_audit(std::span<const TraceRecord> trace, double tol = 1e-10);

// Least-squares slope of log(values) against log(grid).
double log_log_slope(std::span<const double> grid, std::span<const double> values);

// (1/r) D_KL(P_r(theta0) || P_r(theta1)) on r_grid; pass iff the log-log slope
// is at least 0.8 (or the divergence vanishes identically).
ProbeReport kl_rate_probe(const Eigen::MatrixXd& log_joint0, const Eigen::MatrixXd& log_joint1,
                          const Eigen::VectorXd& weights, std::span<const double> r_grid);

// |Delta D_KL(theta0 || theta1, r) - D_KL(theta0 || theta1)| on a grid rising
// to 1; pass iff the gap never grows and ends below 1e-6.
ProbeReport dkl_limit_probe(const Eigen::MatrixXd& log_joint0, const Eigen::MatrixXd& log_joint1,
                            const Eigen::VectorXd& weights, std::span<const double> r_grid);

// Latent-effect quantities for one (theta, theta0, r), with the latent
// configuration of all observations enumerated jointly (row weights must be
// integral; at most 2^20 configurations).
struct LatentEffect {
  double g = 0.0;         // Q_r(theta | theta0) - l_o(theta)
  double bound = 0.0;     // C (Z^r / Z_r) sqrt(Z_{2r+1} / Z^{2r+1})
  double envelope = 0.0;  // C exp(r (log E p0 - E log p0) + E log p0), the r-monotone relaxation of the bound
};

LatentEffect latent_effect(const Eigen::MatrixXd& log_joint, const Eigen::MatrixXd& log_joint0,
                           const Eigen::VectorXd& weights, double r);

// Envelope maximized over the sampled thetas at each r in r_grid (ascending,
// within (0, 0.5]). Pass iff the envelope does not increase as r decreases
// (1e-9 slack) and |G| stays below the bound at every sample.
ProbeReport latent_effect_probe(std::span<const Eigen::MatrixXd> log_joints, const Eigen::MatrixXd& log_joint0,
                                const Eigen::VectorXd& weights, std::span<const double> r_grid);

struct FdCheck {
  double max_rel_error = 0.0;
  bool pass = false;  // max_rel_error <= 1e-6
};

// Central differences of f at x along each coordinate for every step in the
// ladder; per coordinate the best agreement |a - fd| / max(|a|, |fd|, 1) is
// kept and the worst coordinate reported.
FdCheck grad_fd_check(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& analytic, std::span<const double> steps = {});

// Terms of Delta l_o = Delta BQ + Delta D_KL - xi Delta B, each computed on
// its own. Requires both points feasible when xi > 0.
struct IdentityTerms {
  double delta_loglik = 0.0;
  double delta_bq = 0.0;
  double delta_dkl = 0.0;
  double delta_barrier = 0.0;
  double xi = 0.0;
  double residual() const { return delta_loglik - delta_bq - delta_dkl + xi * delta_barrier; }
};

template <LatentModel M>
IdentityTerms identity_terms(const M& model, const typename M::Params& theta0, const typename M::Params& theta1,
                             double r, double xi);

}  // namespace dhem

#include "dhem/diagnostics_impl.h"
