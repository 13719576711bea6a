#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "dhem/diagnostics.h"
#include "dhem/em_core.h"
#include "dhem/gmm.h"
#include "dhem/zip.h"
#include "oracles.h"

#include <cmath>
#include <random>
#include <sstream>

using namespace dhem;

namespace {

const std::vector<int> kToy{0, 0, 2};

Eigen::MatrixXd zip_lj(const zip::ZipModel& m, double pi, double lambda) { return m.log_joint({pi, lambda}); }

}  // namespace

TEST_CASE("monotonicity audit") {
  const std::vector<double> flat(10, -3.0);
  CHECK(monotonicity_audit(flat).empty());
  std::vector<double> up;
  for (int i = 0; i < 10; ++i) up.push_back(-10.0 + i);
  CHECK(monotonicity_audit(up).empty());
  auto dip = up;
  dip[6] = dip[5] - 1e-3;
  const auto flags = monotonicity_audit(dip);
  REQUIRE(flags.size() == 1);
  CHECK(flags[0] == 6);
  const std::vector<double> tiny{1.0, 1.0 - 1e-12, 1.0};
  CHECK(monotonicity_audit(tiny).empty());

  std::vector<TraceRecord> trace(3);
  trace[0].loglik = -2.0;
  trace[1].loglik = -1.0;
  trace[2].loglik = -1.5;
  const auto tf = monotonicity_audit(std::span<const TraceRecord>(trace));
  REQUIRE(tf.size() == 1);
  CHECK(tf[0] == 2);
}

TEST_CASE("log-log slope") {
  const std::vector<double> x{0.1, 0.2, 0.4, 0.8};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * v * v);
  CHECK(log_log_slope(x, y) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("KL rate probe") {
  const zip::ZipModel model(kToy, 0.5);
  const auto lj0 = zip_lj(model, 0.7, 1.0);
  const auto lj1 = zip_lj(model, 0.6, 1.2);
  const std::vector<double> grid{0.01, 0.02, 0.04, 0.08, 0.16};

  const auto same = kl_rate_probe(lj0, lj0, model.row_weights(), grid);
  CHECK(same.pass);
  for (double v : same.values) CHECK(v == 0.0);

  const auto rep = kl_rate_probe(lj0, lj1, model.row_weights(), grid);
  CHECK(rep.pass);
  CHECK(rep.statistic == doctest::Approx(1.0).epsilon(0.05));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto e = oracle::zip_enumerate(kToy, 0.7, 1.0, 0.6, 1.2, grid[i]);
    CHECK(std::abs(rep.values[i] - e.annealed_kl / grid[i]) < 1e-12);
  }

  const std::vector<double> one{1.0};
  const auto at_one = kl_rate_probe(lj0, lj1, model.row_weights(), one);
  const auto e1 = oracle::zip_enumerate(kToy, 0.7, 1.0, 0.6, 1.2, 1.0);
  CHECK(std::abs(at_one.values[0] - e1.annealed_kl) < 1e-12);
  CHECK(std::abs(e1.annealed_kl - e1.dkl) < 1e-12);
}

TEST_CASE("divergence difference limit probe") {
  const zip::ZipModel model(kToy, 0.5);
  const auto lj0 = zip_lj(model, 0.7, 1.0);
  const auto lj1 = zip_lj(model, 0.6, 1.2);
  const std::vector<double> grid{0.9, 0.99, 0.999, 0.9999, 0.99999, 1.0 - 1e-6};

  const auto same = dkl_limit_probe(lj0, lj0, model.row_weights(), grid);
  CHECK(same.pass);
  for (double v : same.values) CHECK(v == 0.0);

  const auto rep = dkl_limit_probe(lj0, lj1, model.row_weights(), grid);
  CHECK(rep.pass);
  CHECK(rep.statistic < 1e-6);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto e = oracle::zip_enumerate(kToy, 0.7, 1.0, 0.6, 1.2, grid[i]);
    CHECK(std::abs(rep.values[i] - e.dkl) < 1e-12);
  }
  const auto e1 = oracle::zip_enumerate(kToy, 0.7, 1.0, 0.6, 1.2, 1.0);
  CHECK(std::abs(delta_dkl(lj0, lj1, 1.0, model.row_weights()) - e1.dkl) < 1e-12);
}

TEST_CASE("latent effect") {
  const zip::ZipModel model(kToy, 0.0);
  const auto lj0 = zip_lj(model, 0.7, 1.0);

  // pi = (1 - pi) e^-lambda makes both latent states of a zero equally likely
  const double lam = 0.8;
  const double pi = std::exp(-lam) / (1.0 + std::exp(-lam));
  for (double r : {0.1, 0.3, 0.5}) {
    const auto le = latent_effect(zip_lj(model, pi, lam), lj0, model.row_weights(), r);
    CHECK(le.g == doctest::Approx(-2.0 * std::log(2.0)).epsilon(1e-12));
    const auto other = latent_effect(zip_lj(model, pi, lam), zip_lj(model, 0.55, 2.0), model.row_weights(), r);
    CHECK(other.g == doctest::Approx(le.g).epsilon(1e-12));
  }

  for (double r : {0.05, 0.25, 0.5, 1.0}) {
    const auto le = latent_effect(zip_lj(model, 0.6, 1.2), lj0, model.row_weights(), r);
    const auto e = oracle::zip_enumerate(kToy, 0.7, 1.0, 0.6, 1.2, r);
    CHECK(std::abs(le.g - e.g) < 1e-12);
    CHECK(std::abs(le.g) <= le.bound + 1e-12);
    if (r <= 0.5) CHECK(le.bound <= le.envelope + 1e-12);
  }
  const auto e1 = oracle::zip_enumerate(kToy, 0.7, 1.0, 0.6, 1.2, 1.0);
  CHECK(std::abs(e1.g - e1.e_log_post) < 1e-12);

  std::mt19937 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Eigen::MatrixXd> samples;
  for (int s = 0; s < 20; ++s) samples.push_back(zip_lj(model, 0.05 + 0.9 * u(gen), 0.2 + 3.0 * u(gen)));
  const std::vector<double> grid{0.05, 0.1, 0.2, 0.3, 0.4, 0.5};
  const auto rep = latent_effect_probe(samples, lj0, model.row_weights(), grid);
  CHECK(rep.pass);
  for (std::size_t i = 1; i < rep.values.size(); ++i) CHECK(rep.values[i] >= rep.values[i - 1] - 1e-9);
}

TEST_CASE("finite-difference gradient check") {
  const Eigen::Vector3d a(1.5, -2.0, 0.25);
  const auto lin = grad_fd_check([&](const Eigen::VectorXd& x) { return a.dot(x); }, Eigen::Vector3d(0.3, 2.0, -7.0),
                                 a);
  CHECK(lin.pass);
  CHECK(lin.max_rel_error < 1e-9);

  const auto wrong = grad_fd_check([&](const Eigen::VectorXd& x) { return a.dot(x); }, Eigen::Vector3d(0.3, 2.0, -7.0),
                                   Eigen::Vector3d(1.5, -2.0, 0.3));
  CHECK_FALSE(wrong.pass);

  const zip::ZipModel model(std::vector<int>{0, 0, 1, 3, 0, 2}, 0.5);
  const auto z = zip::zip_estep(model, {0.7, 1.0}, 0.4);
  const auto zc = grad_fd_check(
      [&](const Eigen::VectorXd& x) { return surrogate_value(model.log_joint({x(0), 1.3}), z, model.row_weights()); },
      Eigen::VectorXd::Constant(1, 0.8), Eigen::VectorXd::Constant(1, zip::zip_grad_pi(model, z, 0.8)));
  CHECK(zc.pass);
}

TEST_CASE("identity terms") {
  std::mt19937 gen(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const zip::ZipModel zm(std::vector<int>{0, 0, 1, 0, 3, 2, 0, 0}, 0.5);
  for (int t = 0; t < 100; ++t) {
    const zip::ZipParams a{0.51 + 0.48 * u(gen), 0.2 + 3 * u(gen)};
    const zip::ZipParams b{0.51 + 0.48 * u(gen), 0.2 + 3 * u(gen)};
    const auto terms = identity_terms(zm, a, b, 0.05 + 0.95 * u(gen), 2.0 * u(gen));
    CHECK(std::abs(terms.residual()) < 1e-8);
  }

  Eigen::MatrixXd x(6, 1);
  x << -2.0, -1.5, -0.5, 0.7, 1.8, 2.4;
  const gmm::GmmModel gm(x);
  for (int t = 0; t < 100; ++t) {
    auto draw = [&] {
      gmm::GmmParams p;
      const double w = 0.2 + 0.6 * u(gen);
      p.weights = Eigen::Vector2d(w, 1.0 - w);
      p.means = {Eigen::VectorXd::Constant(1, -2.0 + u(gen)), Eigen::VectorXd::Constant(1, 1.0 + u(gen))};
      p.covs = {Eigen::MatrixXd::Constant(1, 1, 0.5 + u(gen)), Eigen::MatrixXd::Constant(1, 1, 0.5 + u(gen))};
      return p;
    };
    const auto terms = identity_terms(gm, draw(), draw(), 0.05 + 0.95 * u(gen), u(gen));
    CHECK(std::abs(terms.residual()) < 1e-8);
  }
}

TEST_CASE("probe CSV") {
  ProbeReport rep;
  rep.name = "kl_rate";
  rep.grid = {0.1, 0.2};
  rep.values = {0.5, 1.0};
  rep.statistic = 1.0;
  rep.criterion = "slope>=0.8";
  rep.pass = true;
  std::ostringstream os;
  write_probe_csv(os, std::span<const ProbeReport>(&rep, 1));
  std::istringstream is(os.str());
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(is, line)) lines.push_back(line);
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == "probe,input,value,criterion,pass");
  std::istringstream row(lines[1]);
  std::vector<std::string> f;
  for (std::string cell; std::getline(row, cell, ',');) f.push_back(cell);
  REQUIRE(f.size() == 5);
  CHECK(f[0] == "kl_rate");
  CHECK(std::stod(f[1]) == 0.1);
  CHECK(std::stod(f[2]) == 0.5);
  CHECK(f[3] == "slope>=0.8");
  CHECK(lines[3].find("summary") != std::string::npos);
}
