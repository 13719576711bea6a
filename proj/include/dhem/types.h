#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dhem {

// n x K matrix of (annealed) latent posteriors; row i holds P_r(k | x_i).
using Responsibilities = Eigen::MatrixXd;

enum class Variant { EM, DAEM, BarrierEM, DHEM, AdaptiveDHEM };

std::string_view to_string(Variant v);
// Accepts the CLI spellings: em, daem, barrier, dhem, adaptive.
Variant parse_variant(std::string_view name);

inline bool uses_annealing(Variant v) {
  return v == Variant::DAEM || v == Variant::DHEM || v == Variant::AdaptiveDHEM;
}
inline bool uses_barrier(Variant v) {
  return v == Variant::BarrierEM || v == Variant::DHEM || v == Variant::AdaptiveDHEM;
}

struct ScheduleConfig {
  double r_init = 0.1;
  double r_growth = 1.5;        // per outer level
  double r_retry_growth = 1.2;  // after a failed first acceptance rule
  double xi_decay = 0.5;        // fixed-schedule barrier variants
  std::optional<double> xi_init;  // overrides the model-specific rule
  double tau = 0.5;
  double eta = 0.1;
  int max_iter = 2000;
  double param_tol = 1e-6;
  double loglik_tol = 1e-8;
  std::vector<double> damping_grid{1.0, 0.5, 0.25, 0.125, 0.0625};

  // Throws ConfigError when a bound is violated.
  void validate() const;
};

// The triple (theta, r, xi) plus bookkeeping.
template <class Params>
struct HomotopyState {
  Params theta;
  double r = 1.0;
  double xi = 0.0;
  int iter = 0;
  double loglik = 0.0;
};

enum class AcceptanceReason { Rule1Failed, Rule2AdjustedXi, Accepted, InfeasibleCandidate, GemViolated };

std::string_view to_string(AcceptanceReason reason);

struct AcceptanceOutcome {
  bool accepted = false;
  AcceptanceReason reason = AcceptanceReason::Accepted;
  double new_r = 1.0;
  double new_xi = 0.0;
};

struct TraceRecord {
  int iter = 0;
  double r = 1.0;
  double xi = 0.0;
  double loglik = 0.0;
  double delta_dkl = 0.0;
  double delta_barrier = 0.0;
  std::vector<double> grad;  // surrogate gradient per constrained coordinate
  bool accepted = false;
};

enum class RunStatus {
  Converged,
  CertificationStop,  // adaptive: monotonicity could not be certified at r = 1
  MaxIterations,
  Failed,
};

std::string_view to_string(RunStatus status);

template <class Params>
struct RunResult {
  Params params;
  std::vector<TraceRecord> trace;
  RunStatus status = RunStatus::Converged;
  int iterations = 0;
  double final_r = 1.0;
  double final_xi = 0.0;
  double loglik = 0.0;
  std::string message;
  // Responsibilities that produced the final parameter (the surrogate last
  // maximized). Empty when no M-step was accepted.
  Responsibilities last_resp;

  bool converged() const {
    return status == RunStatus::Converged || status == RunStatus::CertificationStop;
  }
};

}  // namespace dhem
