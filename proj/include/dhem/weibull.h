#pragma once

// Three-component Weibull mixture for bathtub hazards. Component densities
//   f_j(t) = beta_j lambda_j t^(beta_j - 1) exp(-lambda_j t^beta_j)
// with ordered shapes beta_1 < 1, beta_2 = 1, beta_3 > 1. The constrained
// variants enforce the ordering with
//   B(theta) = log beta_1 + log(1 - beta_1) + log(beta_3 - 1).
// Rates are stored as log lambda: fitted wear-out components reach lambda
// values far below the smallest normal double.

#include "dhem/model.h"
#include "dhem/types.h"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace dhem::weibull {

struct WeibullParams {
  Eigen::Vector3d weights = Eigen::Vector3d::Constant(1.0 / 3.0);
  Eigen::Vector3d log_lambda = Eigen::Vector3d::Zero();
  Eigen::Vector3d beta{0.5, 1.0, 2.0};

  Eigen::Vector3d lambda() const { return log_lambda.array().exp(); }
};

double weibull_pdf(double lambda, double beta, double t);

// Uniform weights, the given shapes and lambda_j = 1 / mean(t)^beta_j.
WeibullParams default_init(std::span<const double> times, const Eigen::Vector3d& beta_init);

class WeibullModel {
 public:
  using Params = WeibullParams;

  explicit WeibullModel(std::vector<double> times);

  const std::vector<double>& times() const { return times_; }
  const Eigen::VectorXd& log_times() const { return log_t_; }
  const Eigen::VectorXd& row_weights() const { return weights_; }

  Eigen::MatrixXd log_joint(const WeibullParams& p) const;
  std::optional<double> barrier(const WeibullParams& p) const;
  bool is_feasible(const WeibullParams& p) const;
  bool in_domain(const WeibullParams& p) const;
  MStepResult<WeibullParams> m_step(const WeibullParams& p0, const Responsibilities& resp,
                                    const MStepOptions& opts) const;
  double xi_init(const WeibullParams& p0, const Responsibilities& resp0, double tau) const;
  // (dQ/dbeta_1, dQ/dbeta_3) with lambda held fixed.
  std::vector<double> surrogate_gradient(const WeibullParams& p, const Responsibilities& resp) const;
  double param_distance(const WeibullParams& a, const WeibullParams& b) const;

 private:
  std::vector<double> times_;
  Eigen::VectorXd log_t_;
  Eigen::VectorXd weights_;
};

Responsibilities weibull_estep(const WeibullModel& model, const WeibullParams& params, double r);

// dQ/dbeta_j = sum_i z_ij (1/beta_j + log t_i - lambda_j t_i^beta_j log t_i).
double shape_partial(const WeibullModel& model, const WeibullParams& params, const Responsibilities& resp, int j);

// log of the closed-form rate N_j / sum_i z_ij t_i^beta.
double profile_log_lambda(const WeibullModel& model, const Responsibilities& resp, int j, double beta);

// Derivative of the lambda-profiled surrogate of component j in beta,
//   N_j / beta + sum_i z_ij log t_i - N_j M_1(beta),
// M_1 the mean of log t under weights z_ij t_i^beta. Strictly decreasing.
double profile_shape_score(const WeibullModel& model, const Responsibilities& resp, int j, double beta);

// Root of profile_shape_score plus the barrier derivative xi_coef * dB_j/dbeta
// on (lo, hi) by safeguarded Newton. When the score keeps one sign on the
// bracket the concave objective peaks at that end, which is returned.
double solve_shape(const WeibullModel& model, const Responsibilities& resp, int j, double xi_coef, double lo,
                   double hi);

// pi_j = N_j / n, beta_1 and beta_3 from solve_shape (beta_2 = 1), lambda_j
// profiled. Constrained: brackets (1e-3, 1 - 1e-3) and (1 + 1e-3, 200) with the
// barrier, then backtracking on (beta_1, beta_3) against GEM and feasibility.
// Unconstrained: both shapes on (1e-3, 200), no barrier. Throws
// DegenerateComponent when some N_j < 1e-8.
MStepResult<WeibullParams> weibull_mstep(const WeibullModel& model, const WeibullParams& params0,
                                         const Responsibilities& resp, double xi, bool constrained,
                                         std::span<const double> grid);

// tau min(|dQ/dbeta_1| min(beta_1, 1 - beta_1), |dQ/dbeta_3| (beta_3 - 1)).
double weibull_xi_init(const WeibullModel& model, const WeibullParams& params0, const Responsibilities& resp0,
                       double tau);

// (dQ/dbeta_1, dQ/dbeta_3) at the fitted point, for stationarity reporting.
std::pair<double, double> report_shape_gradients(const WeibullModel& model, const WeibullParams& params,
                                                 const Responsibilities& resp);

}  // namespace dhem::weibull
