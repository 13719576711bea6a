#pragma once

#include "dhem/gmm.h"
#include "dhem/rng.h"
#include "dhem/zip.h"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace dhem::bench {

// Streams of one replication seed: data draws and initialization draws.
enum class Stream : std::uint64_t { Data = 0, Init = 1 };

inline Philox4x32 make_rng(std::uint64_t seed, Stream stream) {
  return Philox4x32(seed, static_cast<std::uint64_t>(stream));
}

// n x d sample: a categorical label from the weights, then a multivariate
// normal draw. Labels are returned through `labels` when given.
Eigen::MatrixXd generate_gmm_data(const gmm::GmmParams& truth, int n, std::uint64_t seed,
                                  std::vector<int>* labels = nullptr);

// Structural zero with probability pi, otherwise Poisson(lambda).
std::vector<int> generate_zip_data(const zip::ZipParams& truth, int n, std::uint64_t seed);

// K distinct data points as means, the overall sample covariance for every
// component and uniform weights, redrawn until the separation constraint
// holds. Throws InfeasibleParameters after max_draws attempts.
gmm::GmmParams random_gmm_init(const gmm::GmmModel& model, int K, std::uint64_t seed, int max_draws = 1000);

// One positive decimal per line, `#` comment lines and blank lines skipped.
// Throws ParseError (1-based line number) for malformed lines and ConfigError
// for nonpositive values, an empty file or a count other than expected_count.
std::vector<double> load_dataset(const std::filesystem::path& path,
                                 std::optional<std::size_t> expected_count = std::nullopt);

}  // namespace dhem::bench
