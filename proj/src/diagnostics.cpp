#include "dhem/diagnostics.h"

#include "dhem/errors.h"
#include "dhem/latent.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dhem {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_grid(std::span<const double> grid) {
  if (grid.empty()) throw std::invalid_argument("probe grid is empty");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("probe grid must be strictly increasing");
  }
  if (!(grid.front() > 0.0) || grid.back() > 1.0) throw std::invalid_argument("probe grid must lie in (0, 1]");
}

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace

void write_probe_csv(std::ostream& out, std::span<const ProbeReport> reports, bool header) {
  if (header) out << "probe,input,value,criterion,pass\n";
  const auto prec = out.precision(17);
  for (const auto& rep : reports) {
    for (std::size_t i = 0; i < rep.grid.size(); ++i) {
      out << rep.name << ',' << rep.grid[i] << ',' << rep.values[i] << ',' << rep.criterion << ','
          << (rep.pass ? 1 : 0) << '\n';
    }
    out << rep.name << ",summary," << rep.statistic << ',' << rep.criterion << ',' << (rep.pass ? 1 : 0) << '\n';
  }
  out.precision(prec);
}

std::vector<std::size_t> monotonicity_audit(std::span<const double> loglik, double tol) {
  std::vector<std::size_t> flagged;
  for (std::size_t t = 1; t < loglik.size(); ++t) {
    if (loglik[t] < loglik[t - 1] - tol) flagged.push_back(t);
  }
  return flagged;
}

std::vector<std::size_t> monotonicity_audit(std::span<const TraceRecord> trace, double tol) {
  std::vector<double> ll;
  ll.reserve(trace.size());
  for (const auto& rec : trace) ll.push_back(rec.loglik);
  return monotonicity_audit(std::span<const double>(ll), tol);
}

double log_log_slope(std::span<const double> grid, std::span<const double> values) {
  if (grid.size() != values.size() || grid.size() < 2) throw std::invalid_argument("slope needs two or more points");
  double mx = 0.0, my = 0.0;
  const double n = static_cast<double>(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0) || !(values[i] > 0.0)) throw std::domain_error("log-log slope needs positive inputs");
    mx += std::log(grid[i]);
    my += std::log(values[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double dx = std::log(grid[i]) - mx;
    sxy += dx * (std::log(values[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

ProbeReport kl_rate_probe(const Eigen::MatrixXd& log_joint0, const Eigen::MatrixXd& log_joint1,
                          const Eigen::VectorXd& weights, std::span<const double> r_grid) {
  require_grid(r_grid);
  ProbeReport rep;
  rep.name = "kl_rate";
  rep.criterion = "slope>=0.8";
  rep.grid.assign(r_grid.begin(), r_grid.end());
  bool all_zero = true;
  bool all_positive = true;
  for (double r : r_grid) {
    const double v = annealed_kl(log_joint0, log_joint1, r, weights) / r;
    if (!std::isfinite(v)) throw NumericalSupport("annealed divergence is not finite");
    rep.values.push_back(v);
    all_zero = all_zero && v == 0.0;
    all_positive = all_positive && v > 0.0;
  }
  if (all_zero) {
    rep.pass = true;
  } else if (all_positive && r_grid.size() >= 2) {
    rep.statistic = log_log_slope(rep.grid, rep.values);
    rep.pass = rep.statistic >= 0.8;
  }
  return rep;
}

ProbeReport dkl_limit_probe(const Eigen::MatrixXd& log_joint0, const Eigen::MatrixXd& log_joint1,
                            const Eigen::VectorXd& weights, std::span<const double> r_grid) {
  require_grid(r_grid);
  ProbeReport rep;
  rep.name = "dkl_limit";
  rep.criterion = "final_gap<1e-6";
  rep.grid.assign(r_grid.begin(), r_grid.end());
  const double full = delta_dkl(log_joint0, log_joint1, 1.0, weights);
  double prev_gap = std::numeric_limits<double>::infinity();
  bool shrinking = true;
  for (double r : r_grid) {
    const double v = delta_dkl(log_joint0, log_joint1, r, weights);
    rep.values.push_back(v);
    const double gap = std::abs(v - full);
    shrinking = shrinking && gap <= prev_gap;
    prev_gap = gap;
  }
  rep.statistic = prev_gap;
  rep.pass = shrinking && prev_gap < 1e-6;
  return rep;
}

LatentEffect latent_effect(const Eigen::MatrixXd& log_joint, const Eigen::MatrixXd& log_joint0,
                           const Eigen::VectorXd& weights, double r) {
  if (!(r > 0.0 && r <= 1.0)) throw std::invalid_argument("annealing level must lie in (0, 1]");
  const Eigen::MatrixXd lp = log_posterior(log_joint);
  const Eigen::MatrixXd lp0 = log_posterior(log_joint0);
  const Eigen::Index K = lp.cols();

  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    const double w = weights(i);
    if (w < 0.0 || w != std::round(w)) throw std::invalid_argument("enumeration needs integral row weights");
    for (int c = 0; c < static_cast<int>(w); ++c) rows.push_back(i);
  }
  const double configs = std::pow(static_cast<double>(K), static_cast<double>(rows.size()));
  if (configs > 1048576.0) throw std::invalid_argument("too many latent configurations to enumerate");

  // Sums over joint configurations s of p0 = P(s | x, theta0).
  double log_sum_p0r = kNegInf;   // log sum p0^r
  double log_sum_p02r1 = kNegInf; // log sum p0^(2r+1)
  double log_sum_p02 = kNegInf;   // log sum p0^2 = log E p0
  double e_log_p0 = 0.0;
  double c_sq = 0.0;
  std::vector<Eigen::Index> state(rows.size(), 0);
  for (;;) {
    double a0 = 0.0, a = 0.0;
    for (std::size_t m = 0; m < rows.size(); ++m) {
      a0 += lp0(rows[m], state[m]);
      a += lp(rows[m], state[m]);
    }
    if (a0 != kNegInf) {
      const double p0 = std::exp(a0);
      log_sum_p0r = log_add(log_sum_p0r, r * a0);
      log_sum_p02r1 = log_add(log_sum_p02r1, (2.0 * r + 1.0) * a0);
      log_sum_p02 = log_add(log_sum_p02, 2.0 * a0);
      e_log_p0 += p0 * a0;
      if (p0 > 0.0) {
        const double ratio = a / p0;
        c_sq += p0 * ratio * ratio;
      }
    }
    std::size_t m = 0;
    while (m < state.size() && ++state[m] == K) state[m++] = 0;
    if (m == state.size()) break;
  }

  const Responsibilities z = annealed_posterior(log_joint0, r);
  LatentEffect out;
  out.g = surrogate_value(log_joint, z, weights) - observed_loglik(log_joint, weights);
  const double c = std::sqrt(c_sq);
  out.bound = c * std::exp(0.5 * log_sum_p02r1 - log_sum_p0r);
  out.envelope = c * std::exp(r * (log_sum_p02 - e_log_p0) + e_log_p0);
  return out;
}

ProbeReport latent_effect_probe(std::span<const Eigen::MatrixXd> log_joints, const Eigen::MatrixXd& log_joint0,
                                const Eigen::VectorXd& weights, std::span<const double> r_grid) {
  require_grid(r_grid);
  if (r_grid.back() > 0.5) throw std::invalid_argument("latent-effect grid must lie in (0, 0.5]");
  if (log_joints.empty()) throw std::invalid_argument("no sampled parameters");
  ProbeReport rep;
  rep.name = "latent_effect";
  rep.criterion = "envelope_nonincreasing_as_r_decreases";
  rep.grid.assign(r_grid.begin(), r_grid.end());
  bool bounded = true;
  for (double r : r_grid) {
    double env = 0.0;
    for (const auto& lj : log_joints) {
      const LatentEffect le = latent_effect(lj, log_joint0, weights, r);
      const double slack = 1e-9 * std::max(1.0, le.envelope);
      bounded = bounded && std::abs(le.g) <= le.bound + slack && le.bound <= le.envelope + slack;
      env = std::max(env, le.envelope);
    }
    rep.values.push_back(env);
  }
  double worst = 0.0;
  for (std::size_t i = 1; i < rep.values.size(); ++i) worst = std::max(worst, rep.values[i - 1] - rep.values[i]);
  rep.statistic = worst;
  rep.pass = bounded && worst <= 1e-9;
  return rep;
}

FdCheck grad_fd_check(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& analytic, std::span<const double> steps) {
  static constexpr double kDefault[] = {1e-4, 1e-5, 1e-6};
  if (steps.empty()) steps = kDefault;
  if (analytic.size() != x.size()) throw std::invalid_argument("gradient size mismatch");
  FdCheck out;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    double best = std::numeric_limits<double>::infinity();
    for (double step : steps) {
      const double h = step * std::max(1.0, std::abs(x(j)));
      Eigen::VectorXd xp = x, xm = x;
      xp(j) += h;
      xm(j) -= h;
      const double fd = (f(xp) - f(xm)) / (2.0 * h);
      const double a = analytic(j);
      const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1.0});
      if (std::isfinite(rel)) best = std::min(best, rel);
    }
    out.max_rel_error = std::max(out.max_rel_error, best);
  }
  out.pass = out.max_rel_error <= 1e-6;
  return out;
}

}  // namespace dhem
