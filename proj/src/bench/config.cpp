#include "dhem/bench/config.h"

#include "dhem/errors.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

namespace dhem::bench {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = s.find(',', start);
    parts.push_back(trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return parts;
}

double to_double(std::string_view s, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw ParseError("expected a number, got '" + std::string(s) + "'", line);
  }
  return v;
}

template <class Int>
Int to_int(std::string_view s, std::size_t line) {
  Int v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw ParseError("expected an integer, got '" + std::string(s) + "'", line);
  }
  return v;
}

std::vector<double> to_doubles(std::string_view s, std::size_t line) {
  std::vector<double> out;
  for (auto part : split_list(s)) out.push_back(to_double(part, line));
  return out;
}

bool to_bool(std::string_view s, std::size_t line) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ParseError("expected a boolean, got '" + std::string(s) + "'", line);
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// gmm.mean.N / gmm.cov.N with 1-based N.
bool indexed_key(std::string_view key, std::string_view prefix, int& index) {
  if (key.substr(0, prefix.size()) != prefix) return false;
  const std::string_view rest = key.substr(prefix.size());
  const auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), index);
  if (ec != std::errc{} || ptr != rest.data() + rest.size() || rest.empty()) return false;
  if (index < 1 || index > 64) throw ConfigError("component index out of range in '" + std::string(key) + "'");
  index -= 1;
  return true;
}

}  // namespace

std::string_view to_string(ModelKind m) {
  switch (m) {
    case ModelKind::Gmm: return "gmm";
    case ModelKind::Zip: return "zip";
    case ModelKind::Weibull: return "weibull";
  }
  return "?";
}

ModelKind parse_model(std::string_view name) {
  if (name == "gmm") return ModelKind::Gmm;
  if (name == "zip") return ModelKind::Zip;
  if (name == "weibull") return ModelKind::Weibull;
  throw ConfigError("unknown model '" + std::string(name) + "'");
}

gmm::GmmParams benchmark_gmm_truth() {
  gmm::GmmParams p;
  p.weights = Eigen::Vector3d(0.2, 0.3, 0.5);
  p.means = {Eigen::Vector3d(-1.0, 1.0, 2.0), Eigen::Vector3d(1.0, 1.0, 0.5), Eigen::Vector3d(2.0, 0.0, -2.0)};
  Eigen::Matrix3d s1, s2, s3;
  s1 << 1.0, 0.3, -0.2, 0.3, 1.0, 0.1, -0.2, 0.1, 1.0;
  s2 << 2.0, 0.18, -0.25, 0.18, 0.1, 0.06, -0.25, 0.06, 0.5;
  s3 << 0.5, -0.08, 0.22, -0.08, 0.1, -0.12, 0.22, -0.12, 2.0;
  p.covs = {s1, s2, s3};
  return p;
}

void RunConfig::validate() const {
  if (replications < 1) throw ConfigError("replications must be at least 1");
  if (methods.empty()) throw ConfigError("no method selected");
  if (model != ModelKind::Weibull && sample_size < 1) throw ConfigError("sample_size must be positive");
  schedule.validate();
  if (model == ModelKind::Zip) {
    if (!(zip.pi_true >= 0.0 && zip.pi_true <= 1.0)) throw ConfigError("zip.pi_true must lie in [0, 1]");
    if (!(zip.lambda_true > 0.0)) throw ConfigError("zip.lambda_true must be positive");
    if (!(zip.pi_min >= 0.0 && zip.pi_min < 1.0)) throw ConfigError("zip.pi_min must lie in [0, 1)");
    if (!(zip.pi_init > zip.pi_min && zip.pi_init < 1.0)) throw ConfigError("zip.pi_init must lie in (pi_min, 1)");
    if (!(zip.lambda_init > 0.0)) throw ConfigError("zip.lambda_init must be positive");
  }
  if (model == ModelKind::Gmm) {
    const auto& t = gmm.truth;
    const int K = t.components();
    if (K < 2) throw ConfigError("gmm needs at least two components");
    if (static_cast<int>(t.means.size()) != K || static_cast<int>(t.covs.size()) != K) {
      throw ConfigError("gmm.weights, gmm.mean.* and gmm.cov.* disagree on the component count");
    }
    if ((t.weights.array() < 0.0).any() || std::abs(t.weights.sum() - 1.0) > 1e-9) {
      throw ConfigError("gmm.weights must be a probability vector");
    }
    const int d = t.dim();
    for (int k = 0; k < K; ++k) {
      if (t.means[k].size() != d || t.covs[k].rows() != d || t.covs[k].cols() != d) {
        throw ConfigError("gmm component " + std::to_string(k + 1) + " has inconsistent dimensions");
      }
    }
    if (!(gmm.delta_sep > 0.0)) throw ConfigError("gmm.delta_sep must be positive");
  }
  if (model == ModelKind::Weibull) {
    const auto& b = weibull.beta_init;
    if (!(b(0) > 0.0 && b(0) < 1.0 && b(1) == 1.0 && b(2) > 1.0)) {
      throw ConfigError("weibull.beta_init must satisfy beta1 in (0, 1), beta2 = 1, beta3 > 1");
    }
  }
}

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  cfg.gmm.truth = benchmark_gmm_truth();
  std::map<int, Eigen::VectorXd> means;
  std::map<int, Eigen::MatrixXd> covs;
  std::optional<Eigen::VectorXd> weights;

  using Setter = std::function<void(std::string_view, std::size_t)>;
  auto num = [](double& dst) -> Setter { return [&dst](std::string_view v, std::size_t l) { dst = to_double(v, l); }; };
  const std::map<std::string, Setter, std::less<>> setters = {
      {"model", [&](std::string_view v, std::size_t) { cfg.model = parse_model(v); }},
      {"method",
       [&](std::string_view v, std::size_t) {
         cfg.methods.clear();
         if (v == "all") {
           cfg.methods = {Variant::EM, Variant::DAEM, Variant::BarrierEM, Variant::DHEM, Variant::AdaptiveDHEM};
           return;
         }
         for (auto part : split_list(v)) {
           const Variant m = parse_variant(part);
           if (std::find(cfg.methods.begin(), cfg.methods.end(), m) != cfg.methods.end()) {
             throw ConfigError("method '" + std::string(part) + "' listed twice");
           }
           cfg.methods.push_back(m);
         }
       }},
      {"replications", [&](std::string_view v, std::size_t l) { cfg.replications = to_int<int>(v, l); }},
      {"sample_size", [&](std::string_view v, std::size_t l) { cfg.sample_size = to_int<int>(v, l); }},
      {"base_seed", [&](std::string_view v, std::size_t l) { cfg.base_seed = to_int<std::uint64_t>(v, l); }},
      {"output", [&](std::string_view v, std::size_t) { cfg.output = std::string(v); }},
      {"trace", [&](std::string_view v, std::size_t l) { cfg.trace = to_bool(v, l); }},
      {"schedule.r_init", num(cfg.schedule.r_init)},
      {"schedule.r_growth", num(cfg.schedule.r_growth)},
      {"schedule.r_retry_growth", num(cfg.schedule.r_retry_growth)},
      {"schedule.xi_decay", num(cfg.schedule.xi_decay)},
      {"schedule.xi_init", [&](std::string_view v, std::size_t l) { cfg.schedule.xi_init = to_double(v, l); }},
      {"schedule.tau", num(cfg.schedule.tau)},
      {"schedule.eta", num(cfg.schedule.eta)},
      {"schedule.max_iter", [&](std::string_view v, std::size_t l) { cfg.schedule.max_iter = to_int<int>(v, l); }},
      {"schedule.param_tol", num(cfg.schedule.param_tol)},
      {"schedule.loglik_tol", num(cfg.schedule.loglik_tol)},
      {"schedule.damping_grid",
       [&](std::string_view v, std::size_t l) { cfg.schedule.damping_grid = to_doubles(v, l); }},
      {"zip.pi_true", num(cfg.zip.pi_true)},
      {"zip.lambda_true", num(cfg.zip.lambda_true)},
      {"zip.pi_init", num(cfg.zip.pi_init)},
      {"zip.lambda_init", num(cfg.zip.lambda_init)},
      {"zip.pi_min", num(cfg.zip.pi_min)},
      {"gmm.delta_sep", num(cfg.gmm.delta_sep)},
      {"gmm.weights", [&](std::string_view v, std::size_t l) { weights = to_vector(to_doubles(v, l)); }},
      {"weibull.dataset",
       [&](std::string_view v, std::size_t) {
         std::filesystem::path p{std::string(v)};
         cfg.weibull.dataset = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
       }},
      {"weibull.beta_init",
       [&](std::string_view v, std::size_t l) {
         const auto b = to_doubles(v, l);
         if (b.size() != 3) throw ConfigError("weibull.beta_init needs three values");
         cfg.weibull.beta_init = Eigen::Vector3d(b[0], b[1], b[2]);
       }},
  };

  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no);
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError("empty key", line_no);
    if (value.empty()) throw ParseError("empty value for '" + std::string(key) + "'", line_no);

    int index = 0;
    if (const auto it = setters.find(key); it != setters.end()) {
      it->second(value, line_no);
    } else if (indexed_key(key, "gmm.mean.", index)) {
      means[index] = to_vector(to_doubles(value, line_no));
    } else if (indexed_key(key, "gmm.cov.", index)) {
      const auto v = to_doubles(value, line_no);
      const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
      if (d * d != static_cast<Eigen::Index>(v.size())) {
        throw ConfigError("'" + std::string(key) + "' needs a square number of entries");
      }
      covs[index] = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          v.data(), d, d);
    } else {
      throw ConfigError("unknown key '" + std::string(key) + "' on line " + std::to_string(line_no));
    }
  }

  if (weights || !means.empty() || !covs.empty()) {
    if (!weights || means.empty() || covs.empty()) {
      throw ConfigError("a custom gmm truth needs gmm.weights, gmm.mean.* and gmm.cov.*");
    }
    gmm::GmmParams t;
    t.weights = *weights;
    const int K = static_cast<int>(t.weights.size());
    for (int k = 0; k < K; ++k) {
      if (!means.count(k) || !covs.count(k)) {
        throw ConfigError("gmm component " + std::to_string(k + 1) + " is missing a mean or covariance");
      }
      t.means.push_back(means[k]);
      t.covs.push_back(covs[k]);
    }
    if (static_cast<int>(means.size()) != K || static_cast<int>(covs.size()) != K) {
      throw ConfigError("more gmm.mean.* or gmm.cov.* entries than weights");
    }
    cfg.gmm.truth = std::move(t);
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config '" + path.string() + "'");
  std::stringstream buf;
  buf << f.rdbuf();
  RunConfig cfg = parse_config(buf.str(), path.parent_path());
  if (const char* env = std::getenv("DHEM_SEED"); env && *env) {
    const std::string_view s = env;
    std::uint64_t seed = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw ConfigError("DHEM_SEED is not an unsigned integer");
    cfg.base_seed = seed;
  }
  return cfg;
}

}  // namespace dhem::bench
