#pragma once

// Zero-inflated Poisson model with a log-barrier lower bound on the
// structural-zero probability.
//
// Latent convention: column 0 of every latent table is the structural-zero
// state (Z = 1), column 1 the Poisson state (Z = 0). Observations are stored
// once per distinct count with a multiplicity weight.

#include "dhem/model.h"
#include "dhem/types.h"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

namespace dhem::zip {

struct ZipParams {
  double pi = 0.5;      // structural-zero probability
  double lambda = 1.0;  // Poisson mean
};

// P(Y = y) under the zero-inflated model.
double zip_pmf(const ZipParams& params, int y);

class ZipModel {
 public:
  using Params = ZipParams;

  ZipModel(std::span<const int> observations, double pi_min);

  const std::vector<int>& values() const { return values_; }
  const Eigen::VectorXd& row_weights() const { return counts_; }
  double sample_size() const { return n_; }
  double pi_min() const { return pi_min_; }

  Eigen::MatrixXd log_joint(const ZipParams& p) const;
  std::optional<double> barrier(const ZipParams& p) const;
  bool is_feasible(const ZipParams& p) const;
  bool in_domain(const ZipParams& p) const;
  MStepResult<ZipParams> m_step(const ZipParams& p0, const Responsibilities& resp, const MStepOptions& opts) const;
  double xi_init(const ZipParams& p0, const Responsibilities& resp0, double tau) const;
  std::vector<double> surrogate_gradient(const ZipParams& p, const Responsibilities& resp) const;
  double param_distance(const ZipParams& a, const ZipParams& b) const;

 private:
  std::vector<int> values_;
  Eigen::VectorXd counts_;
  double n_ = 0.0;
  double pi_min_ = 0.0;
};

// Annealed responsibilities, one row per distinct count of the model.
Responsibilities zip_estep(const ZipModel& model, const ZipParams& params, double r);

// Closed-form lambda and, with xi > 0, the barrier-augmented pi root found
// by bisection on (pi_min, 1). Throws DegenerateComponent when no mass is
// left on the Poisson state.
ZipParams zip_mstep(const ZipModel& model, const Responsibilities& resp, double xi, bool constrained);

// dQ/dpi = sum_i Z_i / pi - sum_i (1 - Z_i) / (1 - pi) under the convention above.
double zip_grad_pi(const ZipModel& model, const Responsibilities& resp, double pi);

// tau |dQ/dpi(pi0)| (pi0 - pi_min).
double zip_xi_init(const ZipModel& model, const ZipParams& params0, const Responsibilities& resp0, double tau);

}  // namespace dhem::zip
