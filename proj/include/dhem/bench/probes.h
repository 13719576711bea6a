#pragma once

// Fixed, seeded probe setups behind `dhem probe`.
//   kl_rate        (1/r) D_KL between annealed posteriors on the ZIP toy pair
//   dkl_limit      Delta D_KL as r -> 1 on the ZIP toy pair
//   latent_effect  bound envelope over sampled thetas on the ZIP toy
//   monotonicity   adaptive traces from 50 random feasible inits per model
//   identity       likelihood-change identity on 100 random tuples per model
//   grad_fd        analytic gradients against central differences

#include "dhem/diagnostics.h"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace dhem::bench {

std::vector<std::string> probe_names();

// Throws ConfigError for an unknown name. `all` runs every probe.
std::vector<ProbeReport> run_probe(std::string_view name, const std::filesystem::path& weibull_dataset);

}  // namespace dhem::bench
