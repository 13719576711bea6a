#include "dhem/latent.h"

#include "dhem/errors.h"

#include <cmath>
#include <limits>

namespace dhem {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_shapes(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::VectorXd& w) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != w.size()) {
    throw std::invalid_argument("latent table shape mismatch");
  }
}
}  // namespace

double log_sum_exp(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  const double m = row.maxCoeff();
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (Eigen::Index k = 0; k < row.size(); ++k) s += std::exp(row(k) - m);
  return m + std::log(s);
}

Responsibilities annealed_posterior(const Eigen::MatrixXd& log_joint, double r) {
  if (!(r > 0.0 && r <= 1.0)) throw std::invalid_argument("annealing level must lie in (0, 1]");
  Responsibilities z(log_joint.rows(), log_joint.cols());
  for (Eigen::Index i = 0; i < log_joint.rows(); ++i) {
    const double m = log_joint.row(i).maxCoeff();
    if (m == kNegInf || std::isnan(m)) throw DegenerateObservation(static_cast<std::size_t>(i));
    double s = 0.0;
    for (Eigen::Index k = 0; k < log_joint.cols(); ++k) {
      const double e = std::exp(r * (log_joint(i, k) - m));
      z(i, k) = e;
      s += e;
    }
    z.row(i) /= s;
  }
  return z;
}

Eigen::MatrixXd log_posterior(const Eigen::MatrixXd& log_joint) {
  Eigen::MatrixXd out(log_joint.rows(), log_joint.cols());
  for (Eigen::Index i = 0; i < log_joint.rows(); ++i) {
    const double lse = log_sum_exp(log_joint.row(i));
    if (lse == kNegInf) throw DegenerateObservation(static_cast<std::size_t>(i));
    out.row(i) = log_joint.row(i).array() - lse;
  }
  return out;
}

double observed_loglik(const Eigen::MatrixXd& log_joint, const Eigen::VectorXd& weights) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < log_joint.rows(); ++i) {
    total += weights(i) * log_sum_exp(log_joint.row(i));
  }
  return total;
}

double surrogate_value(const Eigen::MatrixXd& log_joint, const Responsibilities& resp,
                       const Eigen::VectorXd& weights) {
  check_shapes(log_joint, resp, weights);
  double total = 0.0;
  for (Eigen::Index i = 0; i < log_joint.rows(); ++i) {
    double row = 0.0;
    for (Eigen::Index k = 0; k < log_joint.cols(); ++k) {
      if (resp(i, k) == 0.0) continue;
      if (log_joint(i, k) == kNegInf) return kNegInf;
      row += resp(i, k) * log_joint(i, k);
    }
    total += weights(i) * row;
  }
  return total;
}

double delta_dkl(const Eigen::MatrixXd& log_joint0, const Eigen::MatrixXd& log_joint1, double r,
                 const Eigen::VectorXd& weights) {
  check_shapes(log_joint0, log_joint1, weights);
  const Responsibilities pr = annealed_posterior(log_joint0, r);
  const Eigen::MatrixXd lp0 = log_posterior(log_joint0);
  const Eigen::MatrixXd lp1 = log_posterior(log_joint1);
  double total = 0.0;
  for (Eigen::Index i = 0; i < pr.rows(); ++i) {
    double row = 0.0;
    for (Eigen::Index k = 0; k < pr.cols(); ++k) {
      if (pr(i, k) == 0.0) continue;
      if (lp1(i, k) == kNegInf) {
        throw NumericalSupport("latent state (" + std::to_string(i) + ", " + std::to_string(k) +
                               ") has annealed weight but zero posterior under the candidate");
      }
      row += pr(i, k) * (lp0(i, k) - lp1(i, k));
    }
    total += weights(i) * row;
  }
  return total;
}

double annealed_kl(const Eigen::MatrixXd& log_joint0, const Eigen::MatrixXd& log_joint1, double r,
                   const Eigen::VectorXd& weights) {
  check_shapes(log_joint0, log_joint1, weights);
  const Responsibilities p0 = annealed_posterior(log_joint0, r);
  const Responsibilities p1 = annealed_posterior(log_joint1, r);
  double total = 0.0;
  for (Eigen::Index i = 0; i < p0.rows(); ++i) {
    double row = 0.0;
    for (Eigen::Index k = 0; k < p0.cols(); ++k) {
      if (p0(i, k) == 0.0) continue;
      if (p1(i, k) == 0.0) throw NumericalSupport("annealed posterior support mismatch");
      row += p0(i, k) * (std::log(p0(i, k)) - std::log(p1(i, k)));
    }
    total += weights(i) * row;
  }
  return total;
}

double kl_lower_bound(const Eigen::MatrixXd& log_joint0, const Eigen::MatrixXd& log_joint1, double eta,
                      const Eigen::VectorXd& weights) {
  if (!(eta >= 0.0 && eta < 1.0)) throw std::invalid_argument("eta must lie in [0, 1)");
  if (eta == 0.0) return 0.0;
  const double kl = delta_dkl(log_joint0, log_joint1, 1.0, weights);
  return eta * std::max(kl, 0.0);
}

}  // namespace dhem
