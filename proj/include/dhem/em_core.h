#pragma once

// Generic drivers for the five EM variants over any LatentModel.
//
// Fixed-schedule variants run EM to convergence at each outer level, then
// advance r <- min(1, r * r_growth) and/or xi <- xi * xi_decay. They stop once
// r = 1 and either no barrier is active or a level converges on its very first
// step (the schedule no longer moves the estimate).
//
// The adaptive variant accepts a candidate only when
//   Delta D_KL(theta0 || cand, r) >= delta = eta * D_KL(theta0 || cand)      (rule 1)
//   delta >= xi |Delta B|  (otherwise xi shrinks to delta / |Delta B|)      (rule 2)
// and the candidate satisfies the GEM inequality at the final xi. Together
// these give Delta l_o >= Delta BQ + Delta D_KL - xi |Delta B| >= 0.

#include "dhem/acceptance.h"
#include "dhem/errors.h"
#include "dhem/latent.h"
#include "dhem/model.h"
#include "dhem/types.h"

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>

namespace dhem {

template <LatentModel M>
Responsibilities annealed_posterior(const M& model, const typename M::Params& theta, double r) {
  return annealed_posterior(model.log_joint(theta), r);
}

template <LatentModel M>
double observed_loglik(const M& model, const typename M::Params& theta) {
  return observed_loglik(model.log_joint(theta), model.row_weights());
}

// Q_r(theta | theta0) + xi B(theta). nullopt when xi > 0 and theta is
// outside the barrier's domain.
template <LatentModel M>
std::optional<double> barrier_surrogate(const M& model, const typename M::Params& theta,
                                        const typename M::Params& theta0, double r, double xi) {
  const Responsibilities z = annealed_posterior(model, theta0, r);
  const double q = surrogate_value(model.log_joint(theta), z, model.row_weights());
  if (xi == 0.0) return q;
  const auto b = model.barrier(theta);
  if (!b) return std::nullopt;
  return q + xi * *b;
}

template <LatentModel M>
double delta_dkl(const M& model, const typename M::Params& theta0, const typename M::Params& theta1, double r) {
  return delta_dkl(model.log_joint(theta0), model.log_joint(theta1), r, model.row_weights());
}

template <LatentModel M>
double kl_lower_bound(const M& model, const typename M::Params& theta0, const typename M::Params& theta1,
                      double eta) {
  return kl_lower_bound(model.log_joint(theta0), model.log_joint(theta1), eta, model.row_weights());
}

namespace detail {

template <LatentModel M>
double barrier_or_zero(const M& model, const typename M::Params& theta) {
  const auto b = model.barrier(theta);
  return b ? *b : 0.0;
}

template <LatentModel M>
double initial_xi(const M& model, const typename M::Params& theta, double r, const ScheduleConfig& cfg) {
  if (cfg.xi_init) return *cfg.xi_init;
  return model.xi_init(theta, annealed_posterior(model, theta, r), cfg.tau);
}

template <LatentModel M>
RunResult<typename M::Params> run_fixed(const M& model, Variant variant, const typename M::Params& init,
                                        const ScheduleConfig& cfg) {
  using Params = typename M::Params;
  const bool anneal = uses_annealing(variant);
  const bool barrier = uses_barrier(variant);
  const Eigen::VectorXd& w = model.row_weights();

  HomotopyState<Params> state{init, anneal ? cfg.r_init : 1.0, 0.0, 0, 0.0};
  Eigen::MatrixXd lj = model.log_joint(state.theta);
  state.loglik = observed_loglik(lj, w);

  RunResult<Params> res;
  try {
    if (barrier) state.xi = initial_xi(model, state.theta, state.r, cfg);
    const MStepOptions base{0.0, barrier, std::span<const double>(cfg.damping_grid)};
    bool finished = false;
    while (!finished) {
      int level_iters = 0;
      bool first_step_converged = false;
      for (;;) {
        if (state.iter >= cfg.max_iter) {
          res.status = RunStatus::MaxIterations;
          finished = true;
          break;
        }
        ++state.iter;
        ++level_iters;
        const Responsibilities z = annealed_posterior(lj, state.r);
        MStepOptions opts = base;
        opts.xi = state.xi;
        const auto step = model.m_step(state.theta, z, opts);

        TraceRecord rec;
        rec.iter = state.iter;
        rec.r = state.r;
        rec.xi = state.xi;
        if (step.rejected) {
          rec.loglik = state.loglik;
          rec.grad = model.surrogate_gradient(state.theta, z);
          res.trace.push_back(std::move(rec));
          first_step_converged = level_iters == 1;
          break;
        }
        const Eigen::MatrixXd lj_new = model.log_joint(step.candidate);
        const double lo_new = observed_loglik(lj_new, w);
        if (!std::isfinite(lo_new)) throw DegenerateComponent("observed log-likelihood is not finite");
        rec.delta_dkl = delta_dkl(lj, lj_new, state.r, w);
        if (barrier) rec.delta_barrier = barrier_or_zero(model, step.candidate) - barrier_or_zero(model, state.theta);
        const double change = model.param_distance(state.theta, step.candidate);
        const double dlo = lo_new - state.loglik;

        state.theta = step.candidate;
        lj = lj_new;
        state.loglik = lo_new;
        res.last_resp = z;

        rec.loglik = lo_new;
        rec.grad = model.surrogate_gradient(state.theta, z);
        rec.accepted = true;
        res.trace.push_back(std::move(rec));
        if (change < cfg.param_tol && std::abs(dlo) < cfg.loglik_tol) {
          first_step_converged = level_iters == 1;
          break;
        }
      }
      if (finished) break;
      if (state.r >= 1.0 && (!barrier || first_step_converged)) {
        res.status = RunStatus::Converged;
        break;
      }
      if (anneal) state.r = std::min(1.0, state.r * cfg.r_growth);
      if (barrier) state.xi *= cfg.xi_decay;
    }
  } catch (const Error& e) {
    res.status = RunStatus::Failed;
    res.message = e.what();
  }
  res.params = state.theta;
  res.iterations = state.iter;
  res.final_r = state.r;
  res.final_xi = state.xi;
  res.loglik = state.loglik;
  return res;
}

template <LatentModel M>
RunResult<typename M::Params> run_adaptive(const M& model, const typename M::Params& init,
                                           const ScheduleConfig& cfg) {
  using Params = typename M::Params;
  const Eigen::VectorXd& w = model.row_weights();

  HomotopyState<Params> state{init, cfg.r_init, 0.0, 0, 0.0};
  Eigen::MatrixXd lj = model.log_joint(state.theta);
  state.loglik = observed_loglik(lj, w);

  RunResult<Params> res;
  auto raise_r = [&](double factor) {
    if (state.r >= 1.0) return false;
    state.r = std::min(1.0, state.r * factor);
    return true;
  };

  try {
    state.xi = initial_xi(model, state.theta, state.r, cfg);
    for (;;) {
      if (state.iter >= cfg.max_iter) {
        res.status = RunStatus::MaxIterations;
        break;
      }
      ++state.iter;
      const Responsibilities z = annealed_posterior(lj, state.r);
      const auto step = model.m_step(state.theta, z, {state.xi, true, std::span<const double>(cfg.damping_grid)});

      TraceRecord rec;
      rec.iter = state.iter;
      rec.r = state.r;
      rec.xi = state.xi;
      rec.loglik = state.loglik;
      auto reject = [&]() {
        rec.grad = model.surrogate_gradient(state.theta, z);
        res.trace.push_back(rec);
      };

      if (step.rejected || !model.is_feasible(step.candidate)) {
        reject();
        if (!raise_r(cfg.r_retry_growth)) {
          res.status = RunStatus::CertificationStop;
          break;
        }
        continue;
      }
      const Params& cand = step.candidate;
      const Eigen::MatrixXd lj_c = model.log_joint(cand);
      const double q0 = surrogate_value(lj, z, w);
      const double q1 = surrogate_value(lj_c, z, w);
      const double b0 = *model.barrier(state.theta);
      const double b1 = *model.barrier(cand);
      if (!(q1 + state.xi * b1 >= q0 + state.xi * b0)) {
        // The M-step cannot improve BQ any further at this level.
        reject();
        if (!raise_r(cfg.r_growth)) {
          res.status = RunStatus::Converged;
          break;
        }
        continue;
      }

      const double dkl = delta_dkl(lj, lj_c, state.r, w);
      const double bound = kl_lower_bound(lj, lj_c, cfg.eta, w);
      rec.delta_dkl = dkl;
      rec.delta_barrier = b1 - b0;
      if (!acceptance_rule_1(dkl, bound)) {
        reject();
        if (!raise_r(cfg.r_retry_growth)) {
          res.status = RunStatus::CertificationStop;
          break;
        }
        continue;
      }
      const auto rule2 = acceptance_rule_2_and_shrink(bound, state.xi, std::abs(b1 - b0));
      if (rule2.shrunk) {
        // The certificate needs GEM at the reduced weight as well; otherwise
        // re-solve the M-step with it.
        if (!(q1 + rule2.xi * b1 >= q0 + rule2.xi * b0)) {
          reject();
          state.xi = rule2.xi;
          continue;
        }
        state.xi = rule2.xi;
      }

      const double lo_new = observed_loglik(lj_c, w);
      const double change = model.param_distance(state.theta, cand);
      const double dlo = lo_new - state.loglik;
      state.theta = cand;
      lj = lj_c;
      state.loglik = lo_new;
      res.last_resp = z;

      rec.xi = state.xi;
      rec.loglik = lo_new;
      rec.grad = model.surrogate_gradient(state.theta, z);
      rec.accepted = true;
      res.trace.push_back(std::move(rec));

      if (change < cfg.param_tol && std::abs(dlo) < cfg.loglik_tol) {
        if (!raise_r(cfg.r_growth)) {
          res.status = RunStatus::Converged;
          break;
        }
      }
    }
  } catch (const Error& e) {
    res.status = RunStatus::Failed;
    res.message = e.what();
  }
  res.params = state.theta;
  res.iterations = state.iter;
  res.final_r = state.r;
  res.final_xi = state.xi;
  res.loglik = state.loglik;
  return res;
}

}  // namespace detail

// Runs one of the five variants from a feasible starting point. Model errors
// raised mid-run end the run with RunStatus::Failed and the last valid state;
// an infeasible start throws InfeasibleParameters.
template <LatentModel M>
RunResult<typename M::Params> run_variant(const M& model, Variant variant, const typename M::Params& init,
                                          const ScheduleConfig& cfg) {
  cfg.validate();
  const bool ok = uses_barrier(variant) ? model.is_feasible(init) : model.in_domain(init);
  if (!ok) throw InfeasibleParameters("initial parameters are infeasible");
  RunResult<typename M::Params> res = variant == Variant::AdaptiveDHEM ? detail::run_adaptive(model, init, cfg)
                                                                        : detail::run_fixed(model, variant, init, cfg);
  if (res.last_resp.size() == 0) {
    try {
      res.last_resp = annealed_posterior(model, res.params, res.final_r);
    } catch (const Error&) {
    }
  }
  return res;
}

}  // namespace dhem
