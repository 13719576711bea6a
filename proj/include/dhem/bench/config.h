#pragma once

// Study configuration: flat `key = value` lines with dotted sections.
//   model = zip
//   method = adaptive, em
//   schedule.r_init = 0.1
//   zip.pi_min = 0.5
// `#` starts a comment. Unknown keys are errors.

#include "dhem/gmm.h"
#include "dhem/types.h"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace dhem::bench {

enum class ModelKind { Gmm, Zip, Weibull };

std::string_view to_string(ModelKind m);
ModelKind parse_model(std::string_view name);

struct ZipSetup {
  double pi_true = 0.99;
  double lambda_true = 0.3;
  double pi_init = 0.7;
  double lambda_init = 1.0;
  double pi_min = 0.5;
};

struct GmmSetup {
  double delta_sep = 0.5;
  gmm::GmmParams truth;  // defaults to the three-component benchmark truth
};

struct WeibullSetup {
  std::filesystem::path dataset = "data/aarset.txt";
  Eigen::Vector3d beta_init{0.5, 1.0, 2.0};
};

struct RunConfig {
  ModelKind model = ModelKind::Zip;
  std::vector<Variant> methods{Variant::AdaptiveDHEM};
  int replications = 1;
  int sample_size = 100;
  std::uint64_t base_seed = 1;
  std::filesystem::path output = "out";
  bool trace = false;
  ScheduleConfig schedule;
  ZipSetup zip;
  GmmSetup gmm;
  WeibullSetup weibull;

  // Throws ConfigError on inconsistent values.
  void validate() const;
};

gmm::GmmParams benchmark_gmm_truth();

// Parses config text. Relative dataset paths resolve against base_dir.
// Throws ParseError (with line number) or ConfigError.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});

// Reads and parses a file, then applies the DHEM_SEED override.
RunConfig load_config(const std::filesystem::path& path);

}  // namespace dhem::bench
