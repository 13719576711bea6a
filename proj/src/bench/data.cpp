#include "dhem/bench/data.h"

#include "dhem/errors.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <random>
#include <string>

namespace dhem::bench {

Eigen::MatrixXd generate_gmm_data(const gmm::GmmParams& truth, int n, std::uint64_t seed, std::vector<int>* labels) {
  if (n < 0) throw std::invalid_argument("sample size must be nonnegative");
  const int K = truth.components();
  const int d = truth.dim();
  std::vector<Eigen::MatrixXd> chol;
  for (const auto& c : truth.covs) {
    Eigen::LLT<Eigen::MatrixXd> llt(c);
    if (llt.info() != Eigen::Success) throw DefinitenessError("true covariance is not positive definite");
    chol.emplace_back(llt.matrixL());
  }
  auto rng = make_rng(seed, Stream::Data);
  std::discrete_distribution<int> pick(truth.weights.data(), truth.weights.data() + K);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(n, d);
  if (labels) labels->assign(static_cast<std::size_t>(n), 0);
  Eigen::VectorXd z(d);
  for (int i = 0; i < n; ++i) {
    const int k = pick(rng);
    for (int j = 0; j < d; ++j) z(j) = normal(rng);
    x.row(i) = (truth.means[k] + chol[k] * z).transpose();
    if (labels) (*labels)[static_cast<std::size_t>(i)] = k;
  }
  return x;
}

std::vector<int> generate_zip_data(const zip::ZipParams& truth, int n, std::uint64_t seed) {
  if (n < 0) throw std::invalid_argument("sample size must be nonnegative");
  auto rng = make_rng(seed, Stream::Data);
  std::bernoulli_distribution structural(truth.pi);
  std::poisson_distribution<int> count(truth.lambda);
  std::vector<int> y(static_cast<std::size_t>(n));
  for (auto& v : y) v = structural(rng) ? 0 : count(rng);
  return y;
}

gmm::GmmParams random_gmm_init(const gmm::GmmModel& model, int K, std::uint64_t seed, int max_draws) {
  const Eigen::MatrixXd& x = model.data();
  const auto n = static_cast<int>(x.rows());
  if (K < 1 || n < K) throw std::invalid_argument("need at least K observations");
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n);

  auto rng = make_rng(seed, Stream::Init);
  std::uniform_int_distribution<int> pick(0, n - 1);
  gmm::GmmParams p;
  p.weights = Eigen::VectorXd::Constant(K, 1.0 / K);
  p.covs.assign(static_cast<std::size_t>(K), cov);
  for (int draw = 0; draw < max_draws; ++draw) {
    std::vector<int> idx;
    while (static_cast<int>(idx.size()) < K) {
      const int i = pick(rng);
      if (std::find(idx.begin(), idx.end(), i) == idx.end()) idx.push_back(i);
    }
    p.means.clear();
    for (int i : idx) p.means.emplace_back(x.row(i).transpose());
    if (model.is_feasible(p)) return p;
  }
  throw InfeasibleParameters("no feasible initialization in " + std::to_string(max_draws) + " draws");
}

std::vector<double> load_dataset(const std::filesystem::path& path, std::optional<std::size_t> expected_count) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset '" + path.string() + "'");
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    const char* b = line.data() + first;
    const char* e = line.data() + last + 1;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc{} || ptr != e) throw ParseError("not a number: '" + std::string(b, e) + "'", line_no);
    if (!(v > 0.0)) throw ConfigError("nonpositive value on line " + std::to_string(line_no));
    values.push_back(v);
  }
  if (values.empty()) throw ConfigError("dataset '" + path.string() + "' holds no values");
  if (expected_count && values.size() != *expected_count) {
    throw ConfigError("dataset '" + path.string() + "' holds " + std::to_string(values.size()) + " values, expected " +
                      std::to_string(*expected_count));
  }
  return values;
}

}  // namespace dhem::bench
