#include "dhem/zip.h"

#include "dhem/errors.h"
#include "dhem/latent.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace dhem::zip {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Masses {
  double zero = 0.0;     // sum_i w_i Z_i
  double poisson = 0.0;  // sum_i w_i (1 - Z_i)
  double counts = 0.0;   // sum_i w_i (1 - Z_i) y_i
};

Masses masses(const ZipModel& model, const Responsibilities& resp) {
  const auto& w = model.row_weights();
  Masses m;
  for (Eigen::Index i = 0; i < resp.rows(); ++i) {
    m.zero += w(i) * resp(i, 0);
    m.poisson += w(i) * resp(i, 1);
    m.counts += w(i) * resp(i, 1) * model.values()[static_cast<std::size_t>(i)];
  }
  return m;
}

double pi_score(const Masses& m, double pi, double xi, double pi_min) {
  return m.zero / pi - m.poisson / (1.0 - pi) + xi / (pi - pi_min);
}
}  // namespace

double zip_pmf(const ZipParams& params, int y) {
  if (y < 0) throw std::invalid_argument("count must be nonnegative");
  const double poisson = std::exp(y * std::log(params.lambda) - params.lambda - std::lgamma(y + 1.0));
  if (y == 0) return params.pi + (1.0 - params.pi) * std::exp(-params.lambda);
  return (1.0 - params.pi) * poisson;
}

ZipModel::ZipModel(std::span<const int> observations, double pi_min) : pi_min_(pi_min) {
  if (!(pi_min >= 0.0 && pi_min < 1.0)) throw std::invalid_argument("pi_min must lie in [0, 1)");
  std::map<int, double> hist;
  for (int y : observations) {
    if (y < 0) throw std::invalid_argument("counts must be nonnegative");
    hist[y] += 1.0;
  }
  values_.reserve(hist.size());
  counts_.resize(static_cast<Eigen::Index>(hist.size()));
  Eigen::Index i = 0;
  for (const auto& [y, c] : hist) {
    values_.push_back(y);
    counts_(i++) = c;
  }
  n_ = static_cast<double>(observations.size());
}

Eigen::MatrixXd ZipModel::log_joint(const ZipParams& p) const {
  Eigen::MatrixXd lj(static_cast<Eigen::Index>(values_.size()), 2);
  const double log_pi = std::log(p.pi);
  const double log_rest = std::log1p(-p.pi);
  const double log_lambda = std::log(p.lambda);
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const int y = values_[i];
    const auto row = static_cast<Eigen::Index>(i);
    lj(row, 0) = y == 0 ? log_pi : kNegInf;
    lj(row, 1) = log_rest + y * log_lambda - p.lambda - std::lgamma(y + 1.0);
  }
  return lj;
}

std::optional<double> ZipModel::barrier(const ZipParams& p) const {
  if (!is_feasible(p)) return std::nullopt;
  return std::log(p.pi - pi_min_);
}

bool ZipModel::is_feasible(const ZipParams& p) const {
  return p.pi > pi_min_ && p.pi < 1.0 && p.lambda > 0.0;
}

bool ZipModel::in_domain(const ZipParams& p) const {
  return p.pi > 0.0 && p.pi < 1.0 && p.lambda > 0.0;
}

ZipParams zip_mstep(const ZipModel& model, const Responsibilities& resp, double xi, bool constrained) {
  const Masses m = masses(model, resp);
  if (!(m.poisson > 0.0)) throw DegenerateComponent("no responsibility mass on the Poisson component");
  ZipParams out;
  out.lambda = m.counts / m.poisson;
  if (!(out.lambda > 0.0)) throw DegenerateComponent("Poisson mean collapsed to zero");
  if (!constrained) {
    out.pi = m.zero / (m.zero + m.poisson);
    return out;
  }
  // The score is strictly decreasing on the bracket for fixed responsibilities.
  double lo = model.pi_min() + 1e-12;
  double hi = 1.0 - 1e-12;
  const double f_lo = pi_score(m, lo, xi, model.pi_min());
  const double f_hi = pi_score(m, hi, xi, model.pi_min());
  if (f_lo <= 0.0) {
    out.pi = lo;
    return out;
  }
  if (f_hi >= 0.0) {
    out.pi = hi;
    return out;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (pi_score(m, mid, xi, model.pi_min()) > 0.0) lo = mid; else hi = mid;
  }
  out.pi = 0.5 * (lo + hi);
  return out;
}

MStepResult<ZipParams> ZipModel::m_step(const ZipParams& p0, const Responsibilities& resp,
                                        const MStepOptions& opts) const {
  MStepResult<ZipParams> res{zip_mstep(*this, resp, opts.xi, opts.constrained), false, 1.0};
  if (!opts.constrained) return res;
  const auto bq = [&](const ZipParams& p) -> std::optional<double> {
    const auto b = barrier(p);
    if (!b) return std::nullopt;
    return surrogate_value(log_joint(p), resp, counts_) + opts.xi * *b;
  };
  const auto base = bq(p0);
  for (double alpha : opts.damping_grid) {
    const ZipParams trial{(1.0 - alpha) * p0.pi + alpha * res.candidate.pi,
                          (1.0 - alpha) * p0.lambda + alpha * res.candidate.lambda};
    const auto value = bq(trial);
    if (value && base && *value >= *base) return {trial, false, alpha};
  }
  res.rejected = true;
  return res;
}

double zip_grad_pi(const ZipModel& model, const Responsibilities& resp, double pi) {
  const Masses m = masses(model, resp);
  return m.zero / pi - m.poisson / (1.0 - pi);
}

double zip_xi_init(const ZipModel& model, const ZipParams& params0, const Responsibilities& resp0, double tau) {
  if (!(params0.pi > model.pi_min())) throw InfeasibleParameters("initial pi must exceed pi_min");
  return tau * std::abs(zip_grad_pi(model, resp0, params0.pi)) * (params0.pi - model.pi_min());
}

double ZipModel::xi_init(const ZipParams& p0, const Responsibilities& resp0, double tau) const {
  return zip_xi_init(*this, p0, resp0, tau);
}

std::vector<double> ZipModel::surrogate_gradient(const ZipParams& p, const Responsibilities& resp) const {
  return {zip_grad_pi(*this, resp, p.pi)};
}

double ZipModel::param_distance(const ZipParams& a, const ZipParams& b) const {
  return std::max(std::abs(a.pi - b.pi), std::abs(a.lambda - b.lambda));
}

Responsibilities zip_estep(const ZipModel& model, const ZipParams& params, double r) {
  return annealed_posterior(model.log_joint(params), r);
}

}  // namespace dhem::zip
