#include "dhem/gmm.h"

#include "dhem/errors.h"
#include "dhem/latent.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace dhem::gmm {

namespace {

constexpr double kMinEigen = 1e-10;

double min_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool spd(const Eigen::MatrixXd& m) {
  if (!m.allFinite()) return false;
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, m.cwiseAbs().maxCoeff())) return false;
  return min_eigenvalue(m) > kMinEigen;
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

// Scalar fallback for solve_mu_k: along mu(c) = (s - c S_o) / (N - c (K - 1))
// the condition reduces to c (d^2(mu(c)) - delta) = 2 xi, bracketed on
// (0, N / (K - 1)).
Eigen::VectorXd solve_mu_k_bracketed(const GmmParams& params, const GmmSuffStats& stats, int k, double xi,
                                     double delta_sep) {
  const int K = params.components();
  Eigen::VectorXd others = Eigen::VectorXd::Zero(params.dim());
  for (int l = 0; l < K; ++l) if (l != k) others += params.means[l];
  const double nk = stats.n(k);
  const double c_max = nk / (K - 1);
  GmmParams work = params;
  auto mu_of = [&](double c) -> Eigen::VectorXd { return (stats.s[k] - c * others) / (nk - c * (K - 1)); };
  auto g = [&](double c) {
    work.means[k] = mu_of(c);
    return c * (mahalanobis_separation(work, k) - delta_sep) - 2.0 * xi;
  };
  double lo = 0.0;
  double hi = c_max * 0.5;
  int guard = 0;
  while (g(hi) <= 0.0) {
    lo = hi;
    hi = 0.5 * (hi + c_max);
    if (++guard > 200) throw SolverError("mean update bracket not found", to_vector(mu_of(lo)));
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * c_max; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) > 0.0) hi = mid; else lo = mid;
  }
  return mu_of(0.5 * (lo + hi));
}

}  // namespace

GmmSuffStats suff_stats(const Eigen::MatrixXd& data, const Responsibilities& resp) {
  GmmSuffStats st;
  st.n = resp.colwise().sum().transpose();
  const Eigen::MatrixXd s = resp.transpose() * data;  // K x d
  st.s.reserve(static_cast<std::size_t>(resp.cols()));
  for (Eigen::Index k = 0; k < resp.cols(); ++k) st.s.emplace_back(s.row(k).transpose());
  return st;
}

double mahalanobis_separation(const GmmParams& params, int k) {
  Eigen::LLT<Eigen::MatrixXd> llt(params.covs[k]);
  if (llt.info() != Eigen::Success) throw DefinitenessError("covariance of component " + std::to_string(k) + " is singular");
  double total = 0.0;
  for (int l = 0; l < params.components(); ++l) {
    if (l == k) continue;
    const Eigen::VectorXd diff = params.means[k] - params.means[l];
    total += diff.dot(llt.solve(diff));
  }
  return total;
}

Eigen::VectorXd separation_direction(const GmmParams& params, int k) {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(params.dim());
  for (int l = 0; l < params.components(); ++l) {
    if (l != k) u += params.means[k] - params.means[l];
  }
  return u;
}

Eigen::VectorXd mean_condition(const GmmParams& params, const GmmSuffStats& stats, int k, double xi,
                               double delta_sep) {
  Eigen::VectorXd out = stats.s[k] - stats.n(k) * params.means[k];
  if (xi != 0.0) {
    out += xi * 2.0 / (mahalanobis_separation(params, k) - delta_sep) * separation_direction(params, k);
  }
  return out;
}

Eigen::VectorXd mean_gradient(const GmmParams& params, const GmmSuffStats& stats, int k, double xi,
                              double delta_sep) {
  return params.covs[k].llt().solve(mean_condition(params, stats, k, xi, delta_sep));
}

Eigen::VectorXd solve_mu_k(const GmmParams& params, const GmmSuffStats& stats, int k, double xi,
                           double delta_sep) {
  const double nk = stats.n(k);
  if (!(nk > 0.0)) throw DegenerateComponent("component " + std::to_string(k) + " has no responsibility mass");
  if (xi == 0.0) return stats.s[k] / nk;

  const int K = params.components();
  Eigen::VectorXd others = Eigen::VectorXd::Zero(params.dim());
  for (int l = 0; l < K; ++l) if (l != k) others += params.means[l];

  GmmParams work = params;
  Eigen::VectorXd mu = params.means[k];
  for (int sweep = 0; sweep < 100; ++sweep) {
    work.means[k] = mu;
    const double gap = mahalanobis_separation(work, k) - delta_sep;
    if (!(gap > 0.0)) throw SolverError("mean update left the feasible region", to_vector(mu));
    const double c = 2.0 * xi / gap;
    const double denom = nk - c * (K - 1);
    if (!(denom > 0.0)) throw SolverError("barrier coefficient dominates the component mass", to_vector(mu));
    const Eigen::VectorXd next = (stats.s[k] - c * others) / denom;
    const double step = (next - mu).cwiseAbs().maxCoeff();
    mu = next;
    if (step < 1e-10) return mu;
  }
  throw SolverError("mean update did not converge in 100 sweeps", to_vector(mu));
}

SigmaUpdate update_sigma_k(const Responsibilities& resp, const Eigen::MatrixXd& data, int k,
                           const Eigen::VectorXd& mu) {
  const double nk = resp.col(k).sum();
  if (nk < 1e-8) throw DegenerateComponent("component " + std::to_string(k) + " is empty");
  const Eigen::MatrixXd centered = data.rowwise() - mu.transpose();
  Eigen::MatrixXd cov = centered.transpose() * resp.col(k).asDiagonal() * centered / nk;
  cov = 0.5 * (cov + cov.transpose());
  const bool degenerate = !(min_eigenvalue(cov) > kMinEigen);
  return {std::move(cov), degenerate};
}

GmmModel::GmmModel(Eigen::MatrixXd data, SeparationConfig sep)
    : data_(std::move(data)), weights_(Eigen::VectorXd::Ones(data_.rows())), sep_(std::move(sep)) {
  if (!(sep_.delta_sep > 0.0)) throw ConfigError("separation threshold must be positive");
}

Eigen::MatrixXd GmmModel::log_joint(const GmmParams& p) const {
  const Eigen::Index n = data_.rows();
  const int K = p.components();
  const double d = static_cast<double>(data_.cols());
  Eigen::MatrixXd lj(n, K);
  for (int k = 0; k < K; ++k) {
    Eigen::LLT<Eigen::MatrixXd> llt(p.covs[k]);
    if (llt.info() != Eigen::Success) {
      throw DefinitenessError("covariance of component " + std::to_string(k) + " is not positive definite");
    }
    const Eigen::MatrixXd L = llt.matrixL();
    const double logdet = 2.0 * L.diagonal().array().log().sum();
    const Eigen::MatrixXd centered = (data_.rowwise() - p.means[k].transpose()).transpose();  // d x n
    const Eigen::MatrixXd solved = llt.matrixL().solve(centered);
    const Eigen::VectorXd maha = solved.colwise().squaredNorm().transpose();
    const double base = std::log(p.weights(k)) - 0.5 * (d * std::log(2.0 * std::numbers::pi) + logdet);
    lj.col(k) = (base - 0.5 * maha.array()).matrix();
  }
  return lj;
}

bool GmmModel::in_domain(const GmmParams& p) const {
  if (p.components() < 1 || static_cast<int>(p.means.size()) != p.components() ||
      static_cast<int>(p.covs.size()) != p.components()) {
    return false;
  }
  if ((p.weights.array() <= 0.0).any() || std::abs(p.weights.sum() - 1.0) > 1e-9) return false;
  for (const auto& c : p.covs) if (!spd(c)) return false;
  return true;
}

bool GmmModel::is_feasible(const GmmParams& p) const {
  if (!in_domain(p)) return false;
  for (int k = 0; k < p.components(); ++k) {
    if (!(mahalanobis_separation(p, k) > sep_.delta_sep)) return false;
  }
  return true;
}

std::optional<double> GmmModel::barrier(const GmmParams& p) const {
  if (!is_feasible(p)) return std::nullopt;
  double b = 0.0;
  for (int k = 0; k < p.components(); ++k) b += std::log(mahalanobis_separation(p, k) - sep_.delta_sep);
  return b;
}

MStepResult<GmmParams> backtracking_damping(const GmmModel& model, const GmmParams& old_params,
                                            const GmmParams& proposed, const Responsibilities& resp, double xi,
                                            std::span<const double> grid) {
  const auto& data = model.data();
  const Eigen::VectorXd& w = model.row_weights();
  const auto bq = [&](const GmmParams& p) -> std::optional<double> {
    const auto b = model.barrier(p);
    if (!b) return std::nullopt;
    return surrogate_value(model.log_joint(p), resp, w) + xi * *b;
  };
  const auto base = bq(old_params);
  if (!base) throw InfeasibleParameters("damping requires a feasible starting point");
  for (double alpha : grid) {
    GmmParams trial = proposed;
    bool degenerate = false;
    for (int k = 0; k < trial.components(); ++k) {
      trial.means[k] = (1.0 - alpha) * old_params.means[k] + alpha * proposed.means[k];
      auto sig = update_sigma_k(resp, data, k, trial.means[k]);
      degenerate = degenerate || sig.degenerate;
      trial.covs[k] = std::move(sig.cov);
    }
    if (degenerate) continue;
    const auto value = bq(trial);
    if (value && *value >= *base) return {std::move(trial), false, alpha};
  }
  return {old_params, true, 0.0};
}

MStepResult<GmmParams> GmmModel::m_step(const GmmParams& p0, const Responsibilities& resp,
                                        const MStepOptions& opts) const {
  const GmmSuffStats stats = suff_stats(data_, resp);
  const int K = p0.components();
  GmmParams next = p0;
  next.weights = stats.n / stats.n.sum();

  if (!opts.constrained) {
    for (int k = 0; k < K; ++k) {
      next.means[k] = solve_mu_k(p0, stats, k, 0.0, sep_.delta_sep);
      auto sig = update_sigma_k(resp, data_, k, next.means[k]);
      if (sig.degenerate) throw DegenerateComponent("covariance of component " + std::to_string(k) + " collapsed");
      next.covs[k] = std::move(sig.cov);
    }
    return {std::move(next), false, 1.0};
  }

  // Gauss-Seidel sweep: mu_k against the latest means of the other
  // components and the current Sigma_k, then Sigma_k around the new mean.
  GmmParams work = p0;
  for (int k = 0; k < K; ++k) {
    Eigen::VectorXd mu;
    try {
      mu = solve_mu_k(work, stats, k, opts.xi, sep_.delta_sep);
    } catch (const SolverError&) {
      try {
        mu = solve_mu_k_bracketed(work, stats, k, opts.xi, sep_.delta_sep);
      } catch (const SolverError&) {
        return {p0, true, 0.0};
      }
    }
    work.means[k] = mu;
    next.means[k] = mu;
    auto sig = update_sigma_k(resp, data_, k, mu);
    if (!sig.degenerate) work.covs[k] = sig.cov;
    next.covs[k] = std::move(sig.cov);
  }
  return backtracking_damping(*this, p0, next, resp, opts.xi, opts.damping_grid);
}

double gmm_xi_init(const GmmParams& params0, const GmmSuffStats& stats, double tau, double delta_sep) {
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < params0.components(); ++k) {
    const Eigen::VectorXd u = separation_direction(params0, k);
    const double un = u.norm();
    if (un == 0.0) continue;
    const double gap = mahalanobis_separation(params0, k) - delta_sep;
    if (!(gap > 0.0)) throw InfeasibleParameters("initial means violate the separation constraint");
    const double num = (stats.s[k] - stats.n(k) * params0.means[k]).norm();
    best = std::min(best, num * gap / un);
  }
  if (!std::isfinite(best)) throw ConfigError("every separation direction vanishes; set schedule.xi_init");
  return 0.5 * tau * best;
}

double GmmModel::xi_init(const GmmParams& p0, const Responsibilities& resp0, double tau) const {
  return gmm_xi_init(p0, suff_stats(data_, resp0), tau, sep_.delta_sep);
}

std::vector<double> GmmModel::surrogate_gradient(const GmmParams& p, const Responsibilities& resp) const {
  const GmmSuffStats stats = suff_stats(data_, resp);
  std::vector<double> out;
  for (int k = 0; k < p.components(); ++k) out.push_back(mean_gradient(p, stats, k, 0.0, sep_.delta_sep).norm());
  return out;
}

double GmmModel::param_distance(const GmmParams& a, const GmmParams& b) const {
  double d = (a.weights - b.weights).cwiseAbs().maxCoeff();
  for (int k = 0; k < a.components(); ++k) {
    d = std::max(d, (a.means[k] - b.means[k]).cwiseAbs().maxCoeff());
    d = std::max(d, (a.covs[k] - b.covs[k]).cwiseAbs().maxCoeff());
  }
  return d;
}

Responsibilities gmm_estep(const GmmModel& model, const GmmParams& params, double r) {
  return annealed_posterior(model.log_joint(params), r);
}

GmmErrors gmm_error_metrics(const GmmParams& est, const GmmParams& truth) {
  const int K = truth.components();
  if (est.components() != K) throw std::invalid_argument("component counts differ");
  std::vector<int> perm(static_cast<std::size_t>(K));
  std::iota(perm.begin(), perm.end(), 0);
  GmmErrors best{0.0, std::numeric_limits<double>::infinity(), 0.0};
  do {
    GmmErrors e;
    double mean_sq = 0.0;
    double cov_sq = 0.0;
    for (int k = 0; k < K; ++k) {
      const int j = perm[static_cast<std::size_t>(k)];
      e.weights += std::abs(est.weights(j) - truth.weights(k));
      mean_sq += (est.means[j] - truth.means[k]).squaredNorm();
      cov_sq += (est.covs[j] - truth.covs[k]).squaredNorm();
    }
    e.means = std::sqrt(mean_sq);
    e.covs = std::sqrt(cov_sq);
    if (e.means < best.means) best = e;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace dhem::gmm
