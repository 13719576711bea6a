#include "dhem/bench/probes.h"

#include "dhem/bench/config.h"
#include "dhem/bench/data.h"
#include "dhem/em_core.h"
#include "dhem/errors.h"
#include "dhem/gmm.h"
#include "dhem/rng.h"
#include "dhem/weibull.h"
#include "dhem/zip.h"

#include <random>

namespace dhem::bench {

namespace {

using Uniform = std::uniform_real_distribution<double>;

constexpr std::uint64_t kProbeSeed = 20240917;

const std::vector<int> kZipToy{0, 0, 2};
const zip::ZipParams kToy0{0.7, 1.0};
const zip::ZipParams kToy1{0.6, 1.2};

zip::ZipParams random_zip(Philox4x32& rng) { return {Uniform(0.52, 0.98)(rng), Uniform(0.2, 4.0)(rng)}; }

gmm::GmmParams random_gmm(const gmm::GmmModel& model, Philox4x32& rng, int K, int d) {
  for (;;) {
    gmm::GmmParams p;
    p.weights = Eigen::VectorXd(K);
    for (int k = 0; k < K; ++k) p.weights(k) = Uniform(0.2, 1.0)(rng);
    p.weights /= p.weights.sum();
    p.means.clear();
    p.covs.clear();
    for (int k = 0; k < K; ++k) {
      Eigen::VectorXd mu(d);
      Eigen::MatrixXd a(d, d);
      for (int j = 0; j < d; ++j) mu(j) = Uniform(-3.0, 3.0)(rng);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) a(i, j) = Uniform(-1.0, 1.0)(rng);
      p.means.push_back(mu);
      p.covs.push_back(a * a.transpose() + 0.3 * Eigen::MatrixXd::Identity(d, d));
    }
    if (model.is_feasible(p)) return p;
  }
}

weibull::WeibullParams random_weibull(std::span<const double> times, Philox4x32& rng) {
  const Eigen::Vector3d beta(Uniform(0.1, 0.9)(rng), 1.0, Uniform(1.1, 5.0)(rng));
  weibull::WeibullParams p = weibull::default_init(times, beta);
  for (int j = 0; j < 3; ++j) {
    p.weights(j) = Uniform(0.2, 1.0)(rng);
    p.log_lambda(j) += Uniform(-1.0, 1.0)(rng);
  }
  p.weights /= p.weights.sum();
  return p;
}

Eigen::MatrixXd small_gmm_data() {
  Eigen::MatrixXd x(8, 2);
  x << -2.0, 0.5, -1.5, -0.3, 0.1, 1.2, 0.4, -0.8, 1.9, 2.2, 2.5, 1.1, -0.7, 2.8, 3.1, -1.4;
  return x;
}

const std::vector<double> kSmallTimes{0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0};
const std::vector<int> kSmallCounts{0, 0, 1, 0, 3, 2, 0, 0};

ProbeReport empty_report(std::string name, std::string criterion) {
  ProbeReport r;
  r.name = std::move(name);
  r.criterion = std::move(criterion);
  return r;
}

template <class Model>
void add_monotonicity(ProbeReport& rep, int index, const Model& model, const typename Model::Params& init) {
  const auto res = run_variant(model, Variant::AdaptiveDHEM, init, ScheduleConfig{});
  std::vector<double> ll;
  for (const auto& t : res.trace) {
    if (t.accepted) ll.push_back(t.loglik);
  }
  ll.insert(ll.begin(), observed_loglik(model, init));
  const auto flags = monotonicity_audit(std::span<const double>(ll), 1e-10);
  rep.grid.push_back(index);
  rep.values.push_back(static_cast<double>(flags.size()));
  rep.statistic += static_cast<double>(flags.size());
}

std::vector<ProbeReport> monotonicity(const std::filesystem::path& dataset) {
  std::vector<ProbeReport> out;
  auto rng = Philox4x32(kProbeSeed, 10);
  {
    auto rep = empty_report("monotonicity_zip", "decreases<=1e-10");
    const auto y = generate_zip_data({0.99, 0.3}, 1000, kProbeSeed);
    const zip::ZipModel model(y, 0.5);
    for (int i = 0; i < 50; ++i) add_monotonicity(rep, i, model, random_zip(rng));
    out.push_back(rep);
  }
  {
    auto rep = empty_report("monotonicity_gmm", "decreases<=1e-10");
    const auto truth = benchmark_gmm_truth();
    for (int i = 0; i < 50; ++i) {
      const std::uint64_t seed = kProbeSeed + static_cast<std::uint64_t>(i);
      const gmm::GmmModel model(generate_gmm_data(truth, 100, seed));
      add_monotonicity(rep, i, model, random_gmm_init(model, 3, seed));
    }
    out.push_back(rep);
  }
  {
    auto rep = empty_report("monotonicity_weibull", "decreases<=1e-10");
    const auto times = load_dataset(dataset, 50);
    const weibull::WeibullModel model(times);
    for (int i = 0; i < 50; ++i) add_monotonicity(rep, i, model, random_weibull(times, rng));
    out.push_back(rep);
  }
  for (auto& r : out) r.pass = r.statistic == 0.0;
  return out;
}

template <class Model, class Draw>
ProbeReport identity_suite(std::string name, const Model& model, Draw&& draw, Philox4x32& rng) {
  auto rep = empty_report(std::move(name), "residual<1e-8");
  for (int i = 0; i < 100; ++i) {
    const auto t0 = draw();
    const auto t1 = draw();
    const double r = Uniform(0.05, 1.0)(rng);
    const double xi = Uniform(0.0, 1.0)(rng);
    const double res = std::abs(identity_terms(model, t0, t1, r, xi).residual());
    rep.grid.push_back(i);
    rep.values.push_back(res);
    rep.statistic = std::max(rep.statistic, res);
  }
  rep.pass = rep.statistic < 1e-8;
  return rep;
}

std::vector<ProbeReport> identity() {
  std::vector<ProbeReport> out;
  auto rng = Philox4x32(kProbeSeed, 20);
  const zip::ZipModel zm(kSmallCounts, 0.5);
  out.push_back(identity_suite("identity_zip", zm, [&] { return random_zip(rng); }, rng));
  const gmm::GmmModel gm(small_gmm_data());
  out.push_back(identity_suite("identity_gmm", gm, [&] { return random_gmm(gm, rng, 3, 2); }, rng));
  const weibull::WeibullModel wm(kSmallTimes);
  out.push_back(identity_suite("identity_weibull", wm, [&] { return random_weibull(kSmallTimes, rng); }, rng));
  return out;
}

void add_fd(ProbeReport& rep, int index, const FdCheck& c) {
  rep.grid.push_back(index);
  rep.values.push_back(c.max_rel_error);
  rep.statistic = std::max(rep.statistic, c.max_rel_error);
}

std::vector<ProbeReport> grad_fd() {
  std::vector<ProbeReport> out;
  auto rng = Philox4x32(kProbeSeed, 30);
  const std::string crit = "rel_error<=1e-6";

  {
    auto rep = empty_report("grad_fd_zip_pi", crit);
    const zip::ZipModel model(kSmallCounts, 0.5);
    for (int i = 0; i < 20; ++i) {
      const auto p = random_zip(rng);
      const auto z = zip::zip_estep(model, random_zip(rng), Uniform(0.05, 1.0)(rng));
      const auto f = [&](const Eigen::VectorXd& x) {
        return surrogate_value(model.log_joint({x(0), p.lambda}), z, model.row_weights());
      };
      add_fd(rep, i, grad_fd_check(f, Eigen::VectorXd::Constant(1, p.pi),
                                   Eigen::VectorXd::Constant(1, zip::zip_grad_pi(model, z, p.pi))));
    }
    out.push_back(rep);
  }
  {
    auto rep = empty_report("grad_fd_gmm_mean", crit);
    const gmm::GmmModel model(small_gmm_data());
    const double delta = model.separation().delta_sep;
    for (int i = 0; i < 20; ++i) {
      const auto p = random_gmm(model, rng, 3, 2);
      const auto z = annealed_posterior(model, random_gmm(model, rng, 3, 2), Uniform(0.05, 1.0)(rng));
      const double xi = Uniform(0.0, 2.0)(rng);
      const auto stats = gmm::suff_stats(model.data(), z);
      FdCheck worst;
      for (int k = 0; k < 3; ++k) {
        const auto f = [&](const Eigen::VectorXd& mu) {
          gmm::GmmParams q = p;
          q.means[k] = mu;
          return surrogate_value(model.log_joint(q), z, model.row_weights()) +
                 xi * std::log(gmm::mahalanobis_separation(q, k) - delta);
        };
        const auto c = grad_fd_check(f, p.means[k], gmm::mean_gradient(p, stats, k, xi, delta));
        if (c.max_rel_error >= worst.max_rel_error) worst = c;
      }
      add_fd(rep, i, worst);
    }
    out.push_back(rep);
  }
  {
    auto partial = empty_report("grad_fd_weibull_shape", crit);
    auto profile = empty_report("grad_fd_weibull_profile", crit);
    const weibull::WeibullModel model(kSmallTimes);
    for (int i = 0; i < 20; ++i) {
      const auto p = random_weibull(kSmallTimes, rng);
      const auto z = weibull::weibull_estep(model, random_weibull(kSmallTimes, rng), Uniform(0.05, 1.0)(rng));
      FdCheck worst_partial, worst_profile;
      for (int j : {0, 2}) {
        const auto fq = [&](const Eigen::VectorXd& b) {
          auto q = p;
          q.beta(j) = b(0);
          return surrogate_value(model.log_joint(q), z, model.row_weights());
        };
        const auto c1 = grad_fd_check(fq, Eigen::VectorXd::Constant(1, p.beta(j)),
                                      Eigen::VectorXd::Constant(1, weibull::shape_partial(model, p, z, j)));
        if (c1.max_rel_error >= worst_partial.max_rel_error) worst_partial = c1;
        const auto fp = [&](const Eigen::VectorXd& b) {
          auto q = p;
          q.beta(j) = b(0);
          q.log_lambda(j) = weibull::profile_log_lambda(model, z, j, b(0));
          return surrogate_value(model.log_joint(q), z, model.row_weights());
        };
        const auto c2 = grad_fd_check(fp, Eigen::VectorXd::Constant(1, p.beta(j)),
                                      Eigen::VectorXd::Constant(1, weibull::profile_shape_score(model, z, j, p.beta(j))));
        if (c2.max_rel_error >= worst_profile.max_rel_error) worst_profile = c2;
      }
      add_fd(partial, i, worst_partial);
      add_fd(profile, i, worst_profile);
    }
    out.push_back(partial);
    out.push_back(profile);
  }
  for (auto& r : out) r.pass = r.statistic <= 1e-6;
  return out;
}

}  // namespace

std::vector<std::string> probe_names() {
  return {"kl_rate", "dkl_limit", "latent_effect", "monotonicity", "identity", "grad_fd"};
}

std::vector<ProbeReport> run_probe(std::string_view name, const std::filesystem::path& weibull_dataset) {
  const zip::ZipModel toy(kZipToy, 0.5);
  const Eigen::MatrixXd l0 = toy.log_joint(kToy0);
  const Eigen::MatrixXd l1 = toy.log_joint(kToy1);
  if (name == "kl_rate") {
    const std::vector<double> grid{0.01, 0.02, 0.04, 0.08, 0.16};
    return {kl_rate_probe(l0, l1, toy.row_weights(), grid)};
  }
  if (name == "dkl_limit") {
    const std::vector<double> grid{0.9, 0.99, 0.999, 0.9999, 0.99999, 1.0 - 1e-6};
    return {dkl_limit_probe(l0, l1, toy.row_weights(), grid)};
  }
  if (name == "latent_effect") {
    auto rng = Philox4x32(kProbeSeed, 40);
    std::vector<Eigen::MatrixXd> samples;
    for (int i = 0; i < 50; ++i) samples.push_back(toy.log_joint(random_zip(rng)));
    const std::vector<double> grid{0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5};
    return {latent_effect_probe(samples, l0, toy.row_weights(), grid)};
  }
  if (name == "monotonicity") return monotonicity(weibull_dataset);
  if (name == "identity") return identity();
  if (name == "grad_fd") return grad_fd();
  if (name == "all") {
    std::vector<ProbeReport> all;
    for (const auto& n : probe_names()) {
      auto part = run_probe(n, weibull_dataset);
      all.insert(all.end(), part.begin(), part.end());
    }
    return all;
  }
  throw ConfigError("unknown probe '" + std::string(name) + "'");
}

}  // namespace dhem::bench
