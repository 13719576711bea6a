#include "dhem/weibull.h"

#include "dhem/errors.h"
#include "dhem/latent.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace dhem::weibull {

namespace {

constexpr double kEdge = 1e-3;
constexpr double kBetaMax = 200.0;

struct LogMoments {
  double mass = 0.0;  // N_j
  double m1 = 0.0;    // mean of log t under z t^beta
  double var = 0.0;   // variance of log t under z t^beta
};

LogMoments log_moments(const WeibullModel& model, const Responsibilities& resp, int j, double beta) {
  const auto& lt = model.log_times();
  const auto& w = model.row_weights();
  double top = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < lt.size(); ++i) {
    const double z = w(i) * resp(i, j);
    if (z > 0.0) top = std::max(top, std::log(z) + beta * lt(i));
  }
  LogMoments m;
  double s = 0.0, s1 = 0.0, s2 = 0.0;
  for (Eigen::Index i = 0; i < lt.size(); ++i) {
    const double z = w(i) * resp(i, j);
    if (!(z > 0.0)) continue;
    m.mass += z;
    const double e = std::exp(std::log(z) + beta * lt(i) - top);
    s += e;
    s1 += e * lt(i);
    s2 += e * lt(i) * lt(i);
  }
  if (s > 0.0) {
    m.m1 = s1 / s;
    m.var = std::max(0.0, s2 / s - m.m1 * m.m1);
  }
  return m;
}

double weighted_log_t(const WeibullModel& model, const Responsibilities& resp, int j) {
  return (model.row_weights().array() * resp.col(j).array() * model.log_times().array()).sum();
}

double barrier_d1(int j, double beta) {
  if (j == 0) return 1.0 / beta - 1.0 / (1.0 - beta);
  if (j == 2) return 1.0 / (beta - 1.0);
  return 0.0;
}

double barrier_d2(int j, double beta) {
  if (j == 0) return -1.0 / (beta * beta) - 1.0 / ((1.0 - beta) * (1.0 - beta));
  if (j == 2) return -1.0 / ((beta - 1.0) * (beta - 1.0));
  return 0.0;
}

WeibullParams with_shapes(const WeibullModel& model, const Responsibilities& resp, const Eigen::Vector3d& weights,
                          const Eigen::Vector3d& beta) {
  WeibullParams p;
  p.weights = weights;
  p.beta = beta;
  for (int j = 0; j < 3; ++j) p.log_lambda(j) = profile_log_lambda(model, resp, j, beta(j));
  return p;
}

std::optional<double> barrier_surrogate(const WeibullModel& model, const WeibullParams& p,
                                        const Responsibilities& resp, double xi) {
  const auto b = model.barrier(p);
  if (!b) return std::nullopt;
  return surrogate_value(model.log_joint(p), resp, model.row_weights()) + xi * *b;
}

}  // namespace

double weibull_pdf(double lambda, double beta, double t) {
  return beta * lambda * std::pow(t, beta - 1.0) * std::exp(-lambda * std::pow(t, beta));
}

WeibullParams default_init(std::span<const double> times, const Eigen::Vector3d& beta_init) {
  if (times.empty()) throw std::invalid_argument("empty dataset");
  const double mean = std::accumulate(times.begin(), times.end(), 0.0) / static_cast<double>(times.size());
  WeibullParams p;
  p.beta = beta_init;
  p.log_lambda = -beta_init * std::log(mean);
  return p;
}

WeibullModel::WeibullModel(std::vector<double> times)
    : times_(std::move(times)),
      log_t_(static_cast<Eigen::Index>(times_.size())),
      weights_(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(times_.size()))) {
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (!(times_[i] > 0.0)) throw std::invalid_argument("failure times must be positive");
    log_t_(static_cast<Eigen::Index>(i)) = std::log(times_[i]);
  }
}

Eigen::MatrixXd WeibullModel::log_joint(const WeibullParams& p) const {
  Eigen::MatrixXd lj(log_t_.size(), 3);
  for (int j = 0; j < 3; ++j) {
    const double base = std::log(p.weights(j)) + std::log(p.beta(j)) + p.log_lambda(j);
    lj.col(j) = (base + (p.beta(j) - 1.0) * log_t_.array() - (p.log_lambda(j) + p.beta(j) * log_t_.array()).exp())
                    .matrix();
  }
  return lj;
}

bool WeibullModel::in_domain(const WeibullParams& p) const {
  if (!p.weights.allFinite() || !p.log_lambda.allFinite() || !p.beta.allFinite()) return false;
  if ((p.weights.array() <= 0.0).any() || std::abs(p.weights.sum() - 1.0) > 1e-9) return false;
  return (p.beta.array() > 0.0).all() && p.beta(1) == 1.0;
}

bool WeibullModel::is_feasible(const WeibullParams& p) const {
  return in_domain(p) && p.beta(0) < 1.0 && p.beta(2) > 1.0;
}

std::optional<double> WeibullModel::barrier(const WeibullParams& p) const {
  if (!is_feasible(p)) return std::nullopt;
  return std::log(p.beta(0)) + std::log(1.0 - p.beta(0)) + std::log(p.beta(2) - 1.0);
}

double profile_log_lambda(const WeibullModel& model, const Responsibilities& resp, int j, double beta) {
  const auto& lt = model.log_times();
  const auto& w = model.row_weights();
  double mass = 0.0;
  Eigen::RowVectorXd terms(lt.size());
  for (Eigen::Index i = 0; i < lt.size(); ++i) {
    const double z = w(i) * resp(i, j);
    mass += z;
    terms(i) = z > 0.0 ? std::log(z) + beta * lt(i) : -std::numeric_limits<double>::infinity();
  }
  if (mass < 1e-8) throw DegenerateComponent("component " + std::to_string(j) + " is empty");
  return std::log(mass) - log_sum_exp(terms);
}

double profile_shape_score(const WeibullModel& model, const Responsibilities& resp, int j, double beta) {
  const LogMoments m = log_moments(model, resp, j, beta);
  return m.mass / beta + weighted_log_t(model, resp, j) - m.mass * m.m1;
}

double solve_shape(const WeibullModel& model, const Responsibilities& resp, int j, double xi_coef, double lo,
                   double hi) {
  const double slt = weighted_log_t(model, resp, j);
  auto eval = [&](double b, double* deriv) {
    const LogMoments m = log_moments(model, resp, j, b);
    if (deriv) *deriv = -m.mass / (b * b) - m.mass * m.var + xi_coef * barrier_d2(j, b);
    return m.mass / b + slt - m.mass * m.m1 + xi_coef * barrier_d1(j, b);
  };
  if (eval(lo, nullptr) <= 0.0) return lo;
  if (eval(hi, nullptr) >= 0.0) return hi;
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 300; ++it) {
    double d = 0.0;
    const double f = eval(x, &d);
    if (f == 0.0) return x;
    if (f > 0.0) lo = x; else hi = x;
    double next = x - f / d;
    if (!std::isfinite(next) || next <= lo || next >= hi) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-15 * std::max(1.0, std::abs(x)) || hi - lo <= 4e-16 * std::max(1.0, x)) {
      return next;
    }
    x = next;
  }
  throw SolverError("shape update did not converge", {x});
}

MStepResult<WeibullParams> weibull_mstep(const WeibullModel& model, const WeibullParams& params0,
                                         const Responsibilities& resp, double xi, bool constrained,
                                         std::span<const double> grid) {
  const Eigen::VectorXd& w = model.row_weights();
  Eigen::Vector3d mass;
  for (int j = 0; j < 3; ++j) {
    mass(j) = (w.array() * resp.col(j).array()).sum();
    if (mass(j) < 1e-8) throw DegenerateComponent("component " + std::to_string(j) + " is empty");
  }
  const Eigen::Vector3d weights = mass / mass.sum();
  Eigen::Vector3d beta(0.0, 1.0, 0.0);
  if (constrained) {
    beta(0) = solve_shape(model, resp, 0, xi, kEdge, 1.0 - kEdge);
    beta(2) = solve_shape(model, resp, 2, xi, 1.0 + kEdge, kBetaMax);
  } else {
    beta(0) = solve_shape(model, resp, 0, 0.0, kEdge, kBetaMax);
    beta(2) = solve_shape(model, resp, 2, 0.0, kEdge, kBetaMax);
  }
  WeibullParams proposal = with_shapes(model, resp, weights, beta);
  if (!constrained) return {std::move(proposal), false, 1.0};

  const auto base = barrier_surrogate(model, params0, resp, xi);
  if (!base) throw InfeasibleParameters("damping requires a feasible starting point");
  for (double alpha : grid) {
    const Eigen::Vector3d b = (1.0 - alpha) * params0.beta + alpha * beta;
    WeibullParams trial = with_shapes(model, resp, weights, Eigen::Vector3d(b(0), 1.0, b(2)));
    const auto value = barrier_surrogate(model, trial, resp, xi);
    if (value && *value >= *base) return {std::move(trial), false, alpha};
  }
  return {params0, true, 0.0};
}

MStepResult<WeibullParams> WeibullModel::m_step(const WeibullParams& p0, const Responsibilities& resp,
                                                const MStepOptions& opts) const {
  return weibull_mstep(*this, p0, resp, opts.xi, opts.constrained, opts.damping_grid);
}

double shape_partial(const WeibullModel& model, const WeibullParams& params, const Responsibilities& resp, int j) {
  const auto& lt = model.log_times();
  const auto& w = model.row_weights();
  const double beta = params.beta(j);
  double g = 0.0;
  for (Eigen::Index i = 0; i < lt.size(); ++i) {
    const double z = w(i) * resp(i, j);
    if (z == 0.0) continue;
    g += z * (1.0 / beta + lt(i) - std::exp(params.log_lambda(j) + beta * lt(i)) * lt(i));
  }
  return g;
}

double weibull_xi_init(const WeibullModel& model, const WeibullParams& params0, const Responsibilities& resp0,
                       double tau) {
  if (!model.is_feasible(params0)) throw InfeasibleParameters("initial shapes violate the ordering");
  const double b1 = params0.beta(0);
  const double b3 = params0.beta(2);
  const double t1 = std::abs(shape_partial(model, params0, resp0, 0)) * std::min(b1, 1.0 - b1);
  const double t3 = std::abs(shape_partial(model, params0, resp0, 2)) * (b3 - 1.0);
  return tau * std::min(t1, t3);
}

double WeibullModel::xi_init(const WeibullParams& p0, const Responsibilities& resp0, double tau) const {
  return weibull_xi_init(*this, p0, resp0, tau);
}

std::vector<double> WeibullModel::surrogate_gradient(const WeibullParams& p, const Responsibilities& resp) const {
  return {shape_partial(*this, p, resp, 0), shape_partial(*this, p, resp, 2)};
}

double WeibullModel::param_distance(const WeibullParams& a, const WeibullParams& b) const {
  double d = (a.weights - b.weights).cwiseAbs().maxCoeff();
  d = std::max(d, (a.beta - b.beta).cwiseAbs().maxCoeff());
  return std::max(d, (a.lambda() - b.lambda()).cwiseAbs().maxCoeff());
}

Responsibilities weibull_estep(const WeibullModel& model, const WeibullParams& params, double r) {
  return annealed_posterior(model.log_joint(params), r);
}

std::pair<double, double> report_shape_gradients(const WeibullModel& model, const WeibullParams& params,
                                                 const Responsibilities& resp) {
  return {shape_partial(model, params, resp, 0), shape_partial(model, params, resp, 2)};
}

}  // namespace dhem::weibull
