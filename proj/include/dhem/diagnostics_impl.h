#pragma once

#include "dhem/errors.h"
#include "dhem/latent.h"

namespace dhem {

template <LatentModel M>
IdentityTerms identity_terms(const M& model, const typename M::Params& theta0, const typename M::Params& theta1,
                             double r, double xi) {
  const Eigen::VectorXd& w = model.row_weights();
  const Eigen::MatrixXd lj0 = model.log_joint(theta0);
  const Eigen::MatrixXd lj1 = model.log_joint(theta1);
  const Responsibilities z = annealed_posterior(lj0, r);
  double b0 = 0.0, b1 = 0.0;
  if (xi != 0.0) {
    const auto ob0 = model.barrier(theta0);
    const auto ob1 = model.barrier(theta1);
    if (!ob0 || !ob1) throw InfeasibleParameters("identity terms need feasible points");
    b0 = *ob0;
    b1 = *ob1;
  }
  IdentityTerms t;
  t.delta_loglik = observed_loglik(lj1, w) - observed_loglik(lj0, w);
  t.delta_bq = (surrogate_value(lj1, z, w) + xi * b1) - (surrogate_value(lj0, z, w) + xi * b0);
  t.delta_dkl = delta_dkl(lj0, lj1, r, w);
  t.delta_barrier = b1 - b0;
  t.xi = xi;
  return t;
}

}  // namespace dhem
