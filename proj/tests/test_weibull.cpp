#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "dhem/bench/data.h"
#include "dhem/em_core.h"
#include "dhem/errors.h"
#include "dhem/weibull.h"

#include <cmath>
#include <limits>

using namespace dhem;
using namespace dhem::weibull;

namespace {

std::vector<double> aarset() { return bench::load_dataset(std::string(DHEM_DATA_DIR) + "/aarset.txt", 50); }

// Q_r with lambda held fixed, as a function of one shape.
double q_at_shape(const WeibullModel& model, WeibullParams p, const Responsibilities& z, int j, double beta) {
  p.beta(j) = beta;
  return surrogate_value(model.log_joint(p), z, model.row_weights());
}

}  // namespace

TEST_CASE("density") {
  CHECK(weibull_pdf(2.0, 0.5, 1.0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-15));
  for (double t : {0.1, 1.0, 3.7}) CHECK(weibull_pdf(0.8, 1.0, t) == doctest::Approx(0.8 * std::exp(-0.8 * t)));
  CHECK(weibull_pdf(1.0, 2.5, 1e-12) < 1e-15);
}

TEST_CASE("density integrates to one") {
  const double T = 50.0;
  for (auto [lambda, beta] : {std::pair{1.3, 0.4}, std::pair{0.2, 1.0}, std::pair{0.05, 2.7}}) {
    // trapezoid in log t from 1e-13 to T; the left piece and the right tail are closed form
    const double a = std::log(1e-13), b = std::log(T);
    const int n = 200000;
    const double h = (b - a) / n;
    double s = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double t = std::exp(a + i * h);
      const double f = weibull_pdf(lambda, beta, t) * t;
      s += (i == 0 || i == n) ? 0.5 * f : f;
    }
    s *= h;
    const double head = 1.0 - std::exp(-lambda * std::pow(1e-13, beta));
    const double tail = std::exp(-lambda * std::pow(T, beta));
    CHECK(std::abs(s + head + tail - 1.0) < 1e-6);
  }
}

TEST_CASE("E-step") {
  const WeibullModel model({0.5, 1.0, 2.0});
  WeibullParams same;
  same.beta = Eigen::Vector3d(1.0, 1.0, 1.0);
  const auto z = weibull_estep(model, same, 0.4);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) CHECK(z(i, j) == doctest::Approx(1.0 / 3.0));
  }

  WeibullParams p;
  p.log_lambda = Eigen::Vector3d(std::log(0.7), std::log(1.1), std::log(0.3));
  const double r = 0.35;
  const auto zr = weibull_estep(model, p, r);
  const Eigen::Vector3d lam = p.lambda();
  for (int i = 0; i < 3; ++i) {
    const double t = model.times()[static_cast<std::size_t>(i)];
    double total = 0.0;
    Eigen::Vector3d a;
    for (int j = 0; j < 3; ++j) {
      a(j) = std::pow(p.weights(j) * weibull_pdf(lam(j), p.beta(j), t), r);
      total += a(j);
    }
    for (int j = 0; j < 3; ++j) CHECK(std::abs(zr(i, j) - a(j) / total) < 1e-14);
  }
}

TEST_CASE("closed-form rate is the stationary point in lambda") {
  const auto times = aarset();
  const WeibullModel model(times);
  const auto init = default_init(times, Eigen::Vector3d(0.5, 1.0, 2.0));
  const auto z = weibull_estep(model, init, 0.3);
  for (int j = 0; j < 3; ++j) {
    WeibullParams p = init;
    p.log_lambda(j) = profile_log_lambda(model, z, j, p.beta(j));
    const double nj = z.col(j).sum();
    auto q = [&](double dlog) {
      WeibullParams s = p;
      s.log_lambda(j) += dlog;
      return surrogate_value(model.log_joint(s), z, model.row_weights());
    };
    const double h = 1e-5;
    CHECK(std::abs((q(h) - q(-h)) / (2 * h)) / nj < 1e-8);
  }

  Responsibilities one(static_cast<Eigen::Index>(times.size()), 3);
  one.setZero();
  one.col(1).setOnes();
  double total = 0.0;
  for (double t : times) total += t;
  CHECK(std::exp(profile_log_lambda(model, one, 1, 1.0)) == doctest::Approx(times.size() / total).epsilon(1e-12));
}

TEST_CASE("shape gradients match finite differences") {
  const auto times = aarset();
  const WeibullModel model(times);
  const auto p = default_init(times, Eigen::Vector3d(0.5, 1.0, 2.0));
  const auto z = weibull_estep(model, p, 0.1);
  for (int j : {0, 2}) {
    const double h = 1e-6;
    const double fd = (q_at_shape(model, p, z, j, p.beta(j) + h) - q_at_shape(model, p, z, j, p.beta(j) - h)) / (2 * h);
    const double an = shape_partial(model, p, z, j);
    CHECK(std::abs(an - fd) / std::max(1.0, std::abs(fd)) < 1e-6);
  }
  const auto g = model.surrogate_gradient(p, z);
  CHECK(g[0] == shape_partial(model, p, z, 0));
  CHECK(g[1] == shape_partial(model, p, z, 2));

  // profiled score
  for (double beta : {0.4, 0.9, 1.7, 4.0}) {
    auto prof = [&](double b) {
      WeibullParams s = p;
      s.beta(0) = b;
      s.log_lambda(0) = profile_log_lambda(model, z, 0, b);
      return surrogate_value(model.log_joint(s), z, model.row_weights());
    };
    const double h = 1e-6;
    const double fd = (prof(beta + h) - prof(beta - h)) / (2 * h);
    CHECK(std::abs(profile_shape_score(model, z, 0, beta) - fd) / std::max(1.0, std::abs(fd)) < 1e-6);
  }
}

TEST_CASE("barrier shape search on a two-point toy") {
  const WeibullModel model({0.01, 3.0});
  Responsibilities z(2, 3);
  z << 0.9, 0.05, 0.05, 0.8, 0.1, 0.1;
  const double xi = 0.01;
  const double found = solve_shape(model, z, 0, xi, 1e-3, 1.0 - 1e-3);

  const double n0 = z.col(0).sum();
  auto objective = [&](double b) {
    double sum_tb = 0.0, sum_log = 0.0;
    for (int i = 0; i < 2; ++i) {
      const double t = model.times()[static_cast<std::size_t>(i)];
      sum_tb += z(i, 0) * std::pow(t, b);
      sum_log += z(i, 0) * std::log(t);
    }
    return n0 * std::log(b) + n0 * std::log(n0 / sum_tb) + (b - 1.0) * sum_log + xi * (std::log(b) + std::log(1.0 - b));
  };
  double best = -std::numeric_limits<double>::infinity(), arg = 0.0;
  for (double b = 0.001; b < 0.999; b += 1e-6) {
    const double v = objective(b);
    if (v > best) {
      best = v;
      arg = b;
    }
  }
  CHECK(std::abs(found - arg) < 1e-4);
  CHECK(found > 0.001);
  CHECK(found < 0.999);
}

TEST_CASE("barrier weight initialization") {
  const auto times = aarset();
  const WeibullModel model(times);
  const auto p = default_init(times, Eigen::Vector3d(0.5, 1.0, 2.0));
  const auto z = weibull_estep(model, p, 0.1);
  const double h = 1e-6;
  const double g1 = (q_at_shape(model, p, z, 0, 0.5 + h) - q_at_shape(model, p, z, 0, 0.5 - h)) / (2 * h);
  const double g3 = (q_at_shape(model, p, z, 2, 2.0 + h) - q_at_shape(model, p, z, 2, 2.0 - h)) / (2 * h);
  const double expect = 0.5 * std::min(std::abs(g1) * 0.5, std::abs(g3) * 1.0);
  CHECK(std::abs(weibull_xi_init(model, p, z, 0.5) - expect) / expect < 1e-6);
}

TEST_CASE("constrained steps keep the shape ordering and satisfy GEM") {
  const auto times = aarset();
  const WeibullModel model(times);
  const std::vector<double> grid{1.0, 0.5, 0.25, 0.125, 0.0625};
  auto p = default_init(times, Eigen::Vector3d(0.5, 1.0, 2.0));
  double xi = 1.0;
  for (double r : {0.1, 0.3, 0.6, 1.0}) {
    const auto z = weibull_estep(model, p, r);
    const auto step = model.m_step(p, z, {xi, true, std::span<const double>(grid)});
    REQUIRE_FALSE(step.rejected);
    const auto& c = step.candidate;
    CHECK(model.is_feasible(c));
    CHECK(c.beta(0) > 0.0);
    CHECK(c.beta(0) < 1.0);
    CHECK(c.beta(1) == 1.0);
    CHECK(c.beta(2) > 1.0);
    const double before = surrogate_value(model.log_joint(p), z, model.row_weights()) + xi * *model.barrier(p);
    const double after = surrogate_value(model.log_joint(c), z, model.row_weights()) + xi * *model.barrier(c);
    CHECK(after >= before - 1e-10);
    p = c;
    xi *= 0.5;
  }
}

TEST_CASE("EM fit on the Aarset data is stationary") {
  const auto times = aarset();
  const WeibullModel model(times);
  ScheduleConfig cfg;
  const auto res = run_variant(model, Variant::EM, default_init(times, Eigen::Vector3d(0.5, 1.0, 2.0)), cfg);
  REQUIRE(res.converged());
  const auto [g1, g3] = report_shape_gradients(model, res.params, res.last_resp);
  CHECK(std::abs(g1) < 1e-10);
  CHECK(std::abs(g3) < 1e-10);
}

TEST_CASE("barrier fit pins the decreasing-hazard shape at one") {
  const auto times = aarset();
  const WeibullModel model(times);
  ScheduleConfig cfg;
  const auto res = run_variant(model, Variant::BarrierEM, default_init(times, Eigen::Vector3d(0.5, 1.0, 2.0)), cfg);
  REQUIRE(res.converged());
  const auto [g1, g3] = report_shape_gradients(model, res.params, res.last_resp);
  CHECK(res.params.beta(0) > 0.99);
  CHECK(g1 > 0.5);
  CHECK(g1 < 10.0);
}

TEST_CASE("infeasible shapes are rejected") {
  const WeibullModel model({1.0, 2.0, 3.0});
  WeibullParams p;
  p.beta = Eigen::Vector3d(1.2, 1.0, 2.0);
  CHECK_FALSE(model.is_feasible(p));
  CHECK_FALSE(model.barrier(p).has_value());
  CHECK_THROWS_AS(run_variant(model, Variant::DHEM, p, ScheduleConfig{}), InfeasibleParameters);
  CHECK_THROWS(WeibullModel({1.0, -2.0}));
}
