#pragma once

// Gaussian mixture with a component-wise log-barrier on the Mahalanobis
// separation of the means:
//   B^[k](theta) = log(d_k^2(mu_k) - delta),
//   d_k^2(mu_k)  = sum_{l != k} (mu_k - mu_l)' Sigma_k^{-1} (mu_k - mu_l).
// The global barrier used for GEM checks and acceptance rules is the sum of
// the component barriers.

#include "dhem/model.h"
#include "dhem/types.h"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace dhem::gmm {

struct GmmParams {
  Eigen::VectorXd weights;
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covs;

  int components() const { return static_cast<int>(weights.size()); }
  int dim() const { return means.empty() ? 0 : static_cast<int>(means.front().size()); }
};

struct SeparationConfig {
  double delta_sep = 0.5;
  std::vector<double> damping_grid{1.0, 0.5, 0.25, 0.125, 0.0625};
};

struct GmmSuffStats {
  Eigen::VectorXd n;               // N_k
  std::vector<Eigen::VectorXd> s;  // s_k = sum_i Z_ik x_i
};

GmmSuffStats suff_stats(const Eigen::MatrixXd& data, const Responsibilities& resp);

// Squared Mahalanobis separation of component k. Throws DefinitenessError for
// a singular Sigma_k.
double mahalanobis_separation(const GmmParams& params, int k);

// u_k = sum_{l != k} (mu_k - mu_l).
Eigen::VectorXd separation_direction(const GmmParams& params, int k);

// s_k - N_k mu_k + xi (2 / (d_k^2 - delta)) u_k, the first-order condition
// with the positive-definite Sigma_k^{-1} factored out.
Eigen::VectorXd mean_condition(const GmmParams& params, const GmmSuffStats& stats, int k, double xi,
                               double delta_sep);

// d/dmu_k of Q_r + xi B^[k]: Sigma_k^{-1} times mean_condition.
Eigen::VectorXd mean_gradient(const GmmParams& params, const GmmSuffStats& stats, int k, double xi,
                              double delta_sep);

// Root of mean_condition in mu_k with the other components fixed. The barrier
// coefficient is frozen at the current iterate and the resulting linear
// equation re-solved until the iterate moves by less than 1e-10 (at most 100
// sweeps). Throws SolverError carrying the last iterate.
Eigen::VectorXd solve_mu_k(const GmmParams& params, const GmmSuffStats& stats, int k, double xi,
                           double delta_sep);

struct SigmaUpdate {
  Eigen::MatrixXd cov;
  bool degenerate = false;  // min eigenvalue <= 1e-10
};

// Closed-form responsibility-weighted covariance around mu. Throws
// DegenerateComponent when N_k < 1e-8.
SigmaUpdate update_sigma_k(const Responsibilities& resp, const Eigen::MatrixXd& data, int k,
                           const Eigen::VectorXd& mu);

class GmmModel {
 public:
  using Params = GmmParams;

  GmmModel(Eigen::MatrixXd data, SeparationConfig sep = {});

  const Eigen::MatrixXd& data() const { return data_; }
  const Eigen::VectorXd& row_weights() const { return weights_; }
  const SeparationConfig& separation() const { return sep_; }

  Eigen::MatrixXd log_joint(const GmmParams& p) const;
  std::optional<double> barrier(const GmmParams& p) const;
  bool is_feasible(const GmmParams& p) const;
  bool in_domain(const GmmParams& p) const;
  MStepResult<GmmParams> m_step(const GmmParams& p0, const Responsibilities& resp, const MStepOptions& opts) const;
  double xi_init(const GmmParams& p0, const Responsibilities& resp0, double tau) const;
  std::vector<double> surrogate_gradient(const GmmParams& p, const Responsibilities& resp) const;
  double param_distance(const GmmParams& a, const GmmParams& b) const;

 private:
  Eigen::MatrixXd data_;
  Eigen::VectorXd weights_;
  SeparationConfig sep_;
};

Responsibilities gmm_estep(const GmmModel& model, const GmmParams& params, double r);

// Picks the first damping factor alpha whose interpolated means (with
// covariances recomputed around them) are feasible and do not decrease
// Q_r + xi B. Weights are taken from the proposal. Rejected when none passes.
MStepResult<GmmParams> backtracking_damping(const GmmModel& model, const GmmParams& old_params,
                                            const GmmParams& proposed, const Responsibilities& resp, double xi,
                                            std::span<const double> grid);

// (tau / 2) min_k ||s_k - N_k mu_k|| D_k / ||u_k||, skipping components with
// u_k = 0. Throws ConfigError when every component is skipped.
double gmm_xi_init(const GmmParams& params0, const GmmSuffStats& stats, double tau, double delta_sep);

struct GmmErrors {
  double weights = 0.0;  // L1
  double means = 0.0;    // L2 over the stacked means
  double covs = 0.0;     // Frobenius over the stacked covariances
};

// Errors after the relabeling of estimated components that minimizes the
// mean error (all K! permutations).
GmmErrors gmm_error_metrics(const GmmParams& est, const GmmParams& truth);

}  // namespace dhem::gmm
