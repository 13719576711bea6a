#include "dhem/types.h"

#include "dhem/errors.h"

#include <string>

namespace dhem {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::EM: return "em";
    case Variant::DAEM: return "daem";
    case Variant::BarrierEM: return "barrier";
    case Variant::DHEM: return "dhem";
    case Variant::AdaptiveDHEM: return "adaptive";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  if (name == "em") return Variant::EM;
  if (name == "daem") return Variant::DAEM;
  if (name == "barrier") return Variant::BarrierEM;
  if (name == "dhem") return Variant::DHEM;
  if (name == "adaptive") return Variant::AdaptiveDHEM;
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

std::string_view to_string(AcceptanceReason reason) {
  switch (reason) {
    case AcceptanceReason::Rule1Failed: return "rule1_failed";
    case AcceptanceReason::Rule2AdjustedXi: return "rule2_adjusted_xi";
    case AcceptanceReason::Accepted: return "accepted";
    case AcceptanceReason::InfeasibleCandidate: return "infeasible_candidate";
    case AcceptanceReason::GemViolated: return "gem_violated";
  }
  return "unknown";
}

std::string_view to_string(RunStatus status) {
  switch (status) {
    case RunStatus::Converged: return "converged";
    case RunStatus::CertificationStop: return "certification_stop";
    case RunStatus::MaxIterations: return "max_iterations";
    case RunStatus::Failed: return "failed";
  }
  return "unknown";
}

void ScheduleConfig::validate() const {
  if (!(r_init > 0.0 && r_init <= 1.0)) throw ConfigError("schedule.r_init must lie in (0, 1]");
  if (!(r_growth > 1.0)) throw ConfigError("schedule.r_growth must exceed 1");
  if (!(r_retry_growth > 1.0)) throw ConfigError("schedule.r_retry_growth must exceed 1");
  if (!(xi_decay > 0.0 && xi_decay < 1.0)) throw ConfigError("schedule.xi_decay must lie in (0, 1)");
  if (xi_init && !(*xi_init >= 0.0)) throw ConfigError("schedule.xi_init must be nonnegative");
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("schedule.tau must lie in (0, 1)");
  if (!(eta >= 0.0 && eta < 1.0)) throw ConfigError("schedule.eta must lie in [0, 1)");
  if (max_iter < 1) throw ConfigError("schedule.max_iter must be positive");
  if (!(param_tol > 0.0) || !(loglik_tol > 0.0)) throw ConfigError("tolerances must be positive");
  if (damping_grid.empty() || damping_grid.front() != 1.0) {
    throw ConfigError("schedule.damping_grid must start at 1");
  }
  for (std::size_t i = 0; i < damping_grid.size(); ++i) {
    if (!(damping_grid[i] > 0.0 && damping_grid[i] <= 1.0)) throw ConfigError("damping values must lie in (0, 1]");
    if (i > 0 && !(damping_grid[i] < damping_grid[i - 1])) {
      throw ConfigError("schedule.damping_grid must be strictly decreasing");
    }
  }
}

}  // namespace dhem
