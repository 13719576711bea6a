#pragma once

// Exact discrete-latent computations shared by every mixture model. A model
// describes itself through its log joint table L(i, k) = log P(x_i, z_i = k | theta)
// (-inf marks an impossible state) and a row-weight vector that lets repeated
// observations be stored once.

#include "dhem/types.h"

#include <Eigen/Dense>

namespace dhem {

// log sum_k exp(row(k)); -inf when every entry is -inf.
double log_sum_exp(const Eigen::Ref<const Eigen::RowVectorXd>& row);

// Row-wise P_r(k | x_i) = exp(r L_ik) / sum_l exp(r L_il), computed with max
// subtraction. Throws DegenerateObservation for an all -inf row.
Responsibilities annealed_posterior(const Eigen::MatrixXd& log_joint, double r);

// log P(z_i = k | x_i) at r = 1.
Eigen::MatrixXd log_posterior(const Eigen::MatrixXd& log_joint);

// l_o = sum_i w_i log sum_k exp(L_ik).
double observed_loglik(const Eigen::MatrixXd& log_joint, const Eigen::VectorXd& weights);

// Q_r = sum_i w_i sum_k Z_ik L_ik. States with zero responsibility are
// skipped; a positive responsibility on an impossible state gives -inf.
double surrogate_value(const Eigen::MatrixXd& log_joint, const Responsibilities& resp,
                       const Eigen::VectorXd& weights);

// Delta D_KL(theta0 || theta1, r): annealed weights from theta0, standard
// posteriors on both sides. May be negative for r < 1.
double delta_dkl(const Eigen::MatrixXd& log_joint0, const Eigen::MatrixXd& log_joint1, double r,
                 const Eigen::VectorXd& weights);

// D_KL(P_r(theta0) || P_r(theta1)) between annealed posteriors, summed over
// observations.
double annealed_kl(const Eigen::MatrixXd& log_joint0, const Eigen::MatrixXd& log_joint1, double r,
                   const Eigen::VectorXd& weights);

// eta * Delta D_KL at r = 1 (clamped at 0 against round-off).
double kl_lower_bound(const Eigen::MatrixXd& log_joint0, const Eigen::MatrixXd& log_joint1, double eta,
                      const Eigen::VectorXd& weights);

}  // namespace dhem
