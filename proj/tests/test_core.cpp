#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "dhem/acceptance.h"
#include "dhem/em_core.h"
#include "dhem/errors.h"
#include "dhem/gmm.h"
#include "dhem/latent.h"
#include "dhem/zip.h"
#include "oracles.h"

#include <cmath>
#include <limits>
#include <random>

using namespace dhem;

namespace {
const std::vector<int> kToy{0, 0, 2};
const zip::ZipParams kTheta0{0.7, 1.0};
const zip::ZipParams kTheta1{0.6, 1.2};
}  // namespace

TEST_CASE("annealed posterior normalizes rows and reduces to the posterior at r = 1") {
  std::mt19937 gen(7);
  std::normal_distribution<double> nd(0.0, 3.0);
  Eigen::MatrixXd lj(6, 3);
  for (int i = 0; i < lj.size(); ++i) lj.data()[i] = nd(gen) - 500.0;
  for (double r : {0.05, 0.3, 0.77, 1.0}) {
    const auto z = annealed_posterior(lj, r);
    CHECK((z.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK((z.array() >= 0.0).all());
  }
  const auto z1 = annealed_posterior(lj, 1.0);
  const Eigen::MatrixXd post = log_posterior(lj).array().exp();
  CHECK((z1 - post).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("annealed posterior hand examples") {
  Eigen::MatrixXd lj(1, 2);
  lj << std::log(0.5), std::log(0.5) + 1.0;
  const auto z = annealed_posterior(lj, 0.5);
  const double e = std::exp(0.5);
  CHECK(z(0, 0) == doctest::Approx(1.0 / (1.0 + e)).epsilon(1e-14));
  CHECK(z(0, 1) == doctest::Approx(e / (1.0 + e)).epsilon(1e-14));
  CHECK(z(0, 0) == doctest::Approx(0.3775).epsilon(1e-4));

  Eigen::MatrixXd tie(1, 2);
  tie << -3.0, -3.0;
  CHECK(annealed_posterior(tie, 0.2)(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("all-impossible row names the observation") {
  Eigen::MatrixXd lj(3, 2);
  const double ninf = -std::numeric_limits<double>::infinity();
  lj << 0.0, -1.0, ninf, ninf, -2.0, 0.0;
  try {
    annealed_posterior(lj, 0.5);
    FAIL("expected DegenerateObservation");
  } catch (const DegenerateObservation& e) {
    CHECK(e.index() == 1);
  }
}

TEST_CASE("barrier surrogate on the ZIP toy matches enumeration") {
  const zip::ZipModel model(kToy, 0.5);
  const auto v = barrier_surrogate(model, kTheta0, kTheta0, 1.0, 0.1);
  REQUIRE(v.has_value());
  const auto en = oracle::zip_enumerate(kToy, 0.7, 1.0, 0.7, 1.0, 1.0);
  CHECK(*v == doctest::Approx(en.q + 0.1 * std::log(0.2)).epsilon(1e-12));

  const auto q = barrier_surrogate(model, kTheta1, kTheta0, 0.4, 0.0);
  CHECK(*q == doctest::Approx(oracle::zip_enumerate(kToy, 0.7, 1.0, 0.6, 1.2, 0.4).q).epsilon(1e-12));
  CHECK_FALSE(barrier_surrogate(model, zip::ZipParams{0.5, 1.0}, kTheta0, 1.0, 0.1).has_value());
}

TEST_CASE("delta D_KL against enumeration") {
  const zip::ZipModel model(kToy, 0.5);
  CHECK(delta_dkl(model, kTheta0, kTheta0, 0.3) == doctest::Approx(0.0));
  const double full = delta_dkl(model, kTheta0, kTheta1, 1.0);
  CHECK(full >= 0.0);
  CHECK(std::abs(full - oracle::zip_enumerate(kToy, 0.7, 1.0, 0.6, 1.2, 1.0).dkl) < 1e-10);
  const double half = delta_dkl(model, kTheta0, kTheta1, 0.5);
  CHECK(std::abs(half - oracle::zip_enumerate(kToy, 0.7, 1.0, 0.6, 1.2, 0.5).dkl) < 1e-12);
}

TEST_CASE("delta D_KL requires support") {
  Eigen::MatrixXd l0(1, 2), l1(1, 2);
  l0 << 0.0, 0.0;
  l1 << 0.0, -std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(delta_dkl(l0, l1, 0.5, Eigen::VectorXd::Ones(1)), NumericalSupport);
}

TEST_CASE("KL lower bound") {
  const zip::ZipModel model(kToy, 0.5);
  CHECK(kl_lower_bound(model, kTheta0, kTheta0, 0.1) == 0.0);
  CHECK(kl_lower_bound(model, kTheta0, kTheta1, 0.0) == 0.0);
  const double oracle_kl = oracle::zip_enumerate(kToy, 0.7, 1.0, 0.6, 1.2, 1.0).dkl;
  CHECK(kl_lower_bound(model, kTheta0, kTheta1, 0.1) == doctest::Approx(0.1 * oracle_kl).epsilon(1e-10));
}

TEST_CASE("acceptance rule 1") {
  CHECK(acceptance_rule_1(0.5, 0.2));
  CHECK_FALSE(acceptance_rule_1(0.1, 0.2));
  CHECK(acceptance_rule_1(0.0, 0.0));
}

TEST_CASE("acceptance rule 2 and barrier shrink") {
  auto a = acceptance_rule_2_and_shrink(0.2, 1.0, 0.5);
  CHECK(a.shrunk);
  CHECK(a.xi == doctest::Approx(0.4));
  auto b = acceptance_rule_2_and_shrink(1.0, 0.1, 0.5);
  CHECK_FALSE(b.shrunk);
  CHECK(b.xi == 0.1);
  auto c = acceptance_rule_2_and_shrink(0.0, 1.0, 0.0);
  CHECK_FALSE(c.shrunk);
  CHECK(c.xi == 1.0);
  CHECK_THROWS_AS(acceptance_rule_2_and_shrink(-1e-3, 1.0, 0.5), InvalidBound);
}

TEST_CASE("generic barrier weight") {
  CHECK(xi_init_generic(10.0, 2.0, 0.5) == doctest::Approx(2.5));
  CHECK(xi_init_generic(0.0, 5.0, 0.5) == 0.0);
  CHECK_THROWS(xi_init_generic(1.0, 0.0, 0.5));

  // ZIP toy at pi0 = 0.7: both gradients from central differences.
  const zip::ZipModel model(kToy, 0.5);
  const auto z = zip::zip_estep(model, kTheta0, 1.0);
  const double h = 1e-6;
  auto q = [&](double pi) { return surrogate_value(model.log_joint({pi, 1.0}), z, model.row_weights()); };
  const double gq = (q(0.7 + h) - q(0.7 - h)) / (2 * h);
  const double gb = (std::log(0.7 + h - 0.5) - std::log(0.7 - h - 0.5)) / (2 * h);
  const double fd = 0.5 * std::abs(gq) / std::abs(gb);
  const double an = xi_init_generic(std::abs(zip::zip_grad_pi(model, z, 0.7)), 1.0 / (0.7 - 0.5), 0.5);
  CHECK(std::abs(an - fd) / std::abs(fd) < 1e-6);
}

TEST_CASE("schedule validation") {
  ScheduleConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.damping_grid = {0.5, 0.25};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = ScheduleConfig{};
  cfg.damping_grid = {1.0, 0.5, 0.5};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = ScheduleConfig{};
  cfg.eta = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = ScheduleConfig{};
  cfg.r_init = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("EM started at a fixed point returns it after one record") {
  Eigen::MatrixXd x(5, 2);
  x << 0.1, 0.3, -1.0, 0.8, 2.0, -0.4, 0.7, 1.1, -0.2, -0.9;
  const gmm::GmmModel model(x);
  gmm::GmmParams p;
  p.weights = Eigen::VectorXd::Ones(1);
  const Eigen::VectorXd mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd c = x.rowwise() - mean.transpose();
  p.means = {mean};
  p.covs = {c.transpose() * c / 5.0};
  const auto res = run_variant(model, Variant::EM, p, ScheduleConfig{});
  CHECK(res.status == RunStatus::Converged);
  CHECK(res.trace.size() == 1);
  CHECK(model.param_distance(res.params, p) < 1e-12);
}

TEST_CASE("EM on the ZIP toy reaches the grid-search MLE") {
  const zip::ZipModel model(kToy, 0.0);
  const auto res = run_variant(model, Variant::EM, zip::ZipParams{0.5, 1.0}, ScheduleConfig{});
  REQUIRE(res.converged());
  const auto best = oracle::grid_search_2d([](double pi, double lam) { return oracle::zip_loglik(kToy, pi, lam); },
                                           {1e-6, 1e-3}, {1.0 - 1e-6, 10.0});
  CHECK(std::abs(res.params.pi - best(0)) < 1e-4);
  CHECK(std::abs(res.params.lambda - best(1)) < 1e-4);
}

TEST_CASE("adaptive ZIP trace never decreases the likelihood") {
  std::vector<int> y;
  for (int i = 0; i < 300; ++i) y.push_back(i % 10 == 0 ? 1 : 0);
  y.push_back(3);
  const zip::ZipModel model(y, 0.5);
  const auto res = run_variant(model, Variant::AdaptiveDHEM, zip::ZipParams{0.7, 1.0}, ScheduleConfig{});
  CHECK(res.converged());
  double prev = observed_loglik(model, zip::ZipParams{0.7, 1.0});
  for (const auto& t : res.trace) {
    CHECK(t.loglik >= prev - 1e-10);
    CHECK(std::isfinite(t.loglik));
    prev = t.loglik;
  }
}

TEST_CASE("infeasible start is an error, non-convergence is a status") {
  const zip::ZipModel model(kToy, 0.5);
  CHECK_THROWS_AS(run_variant(model, Variant::BarrierEM, zip::ZipParams{0.4, 1.0}, ScheduleConfig{}),
                  InfeasibleParameters);
  ScheduleConfig cfg;
  cfg.max_iter = 3;
  const auto res = run_variant(model, Variant::EM, zip::ZipParams{0.9, 4.0}, cfg);
  CHECK(res.status == RunStatus::MaxIterations);
  CHECK(res.iterations == 3);
}

TEST_CASE("every variant keeps its states in the allowed set and respects GEM") {
  std::vector<int> y;
  for (int i = 0; i < 200; ++i) y.push_back(i % 7 == 0 ? (i % 3) + 1 : 0);
  const zip::ZipModel model(y, 0.5);
  for (Variant v : {Variant::EM, Variant::DAEM, Variant::BarrierEM, Variant::DHEM, Variant::AdaptiveDHEM}) {
    CAPTURE(to_string(v));
    const auto res = run_variant(model, v, zip::ZipParams{0.7, 1.0}, ScheduleConfig{});
    CHECK(res.status != RunStatus::Failed);
    if (uses_barrier(v)) CHECK(model.is_feasible(res.params));
    for (const auto& t : res.trace) {
      CHECK(t.r > 0.0);
      CHECK(t.r <= 1.0);
      CHECK(t.xi >= 0.0);
    }
  }
}
