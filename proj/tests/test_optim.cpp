#include <cmath>

#include "doctest.h"
#include "fairlp/error.hpp"
#include "fairlp/numeric.hpp"
#include "fairlp/optim.hpp"

using namespace fairlp;

TEST_CASE("numeric helpers") {
  CHECK(sigmoid(0.0) == doctest::Approx(0.5));
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(softplus(800.0) == doctest::Approx(800.0));
  CHECK(softplus(-800.0) == doctest::Approx(0.0));
  CHECK(logit(sigmoid(1.3)) == doctest::Approx(1.3).epsilon(1e-12));
  CHECK(sigmoid(kMaxLogit) == doctest::Approx(1.0 - kProbFloor).epsilon(1e-12));
  CHECK(clamp_logit(100.0) == kMaxLogit);
  CHECK(bernoulli_kl(0.7, 0.2) == doctest::Approx(0.7 * std::log(0.7 / 0.2) + 0.3 * std::log(0.3 / 0.8)));
  CHECK(bernoulli_kl(0.4, 0.4) == doctest::Approx(0.0));

  std::vector<double> xs(1000001, 0.1);
  xs[0] = 1e16;
  xs.push_back(-1e16);
  // Naive summation returns 0 here: every 0.1 vanishes against 1e16.
  CHECK(compensated_sum(xs) == doctest::Approx(100000.0).epsilon(1e-10));
}

TEST_CASE("first-order optimizers descend a quadratic") {
  for (auto kind : {OptimizerKind::sgd, OptimizerKind::adam}) {
    Optimizer opt(kind, 2, 0.1);
    std::vector<double> x = {3.0, -2.0};
    for (int t = 0; t < 500; ++t) {
      std::vector<double> g = {2.0 * x[0], 4.0 * x[1]};
      opt.step(x, g);
    }
    CHECK(std::abs(x[0]) < 1e-2);
    CHECK(std::abs(x[1]) < 1e-2);
    CHECK(opt.steps_taken() == 500);
  }
}

TEST_CASE("adam first step moves every coordinate by the learning rate") {
  Optimizer opt(OptimizerKind::adam, 3, 0.01);
  std::vector<double> x = {0.0, 0.0, 0.0};
  std::vector<double> g = {5.0, -0.001, 1e3};
  opt.step(x, g);
  CHECK(x[0] == doctest::Approx(-0.01).epsilon(1e-6));
  CHECK(x[1] == doctest::Approx(0.01).epsilon(1e-4));
  CHECK(x[2] == doctest::Approx(-0.01).epsilon(1e-6));
}

TEST_CASE("optimizer rejects non-finite gradients without moving") {
  Optimizer opt(OptimizerKind::adam, 2, 0.1);
  std::vector<double> x = {1.0, 1.0};
  std::vector<double> g = {NAN, 0.0};
  CHECK_THROWS_AS(opt.step(x, g), NumericalError);
  CHECK(x[0] == 1.0);
  CHECK_THROWS_AS(optimizer_from_string("rmsprop"), InputError);
}

TEST_CASE("lbfgs minimises the Rosenbrock function") {
  Objective f = [](std::span<const double> x, std::span<double> g) {
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    g[0] = -2.0 * a - 400.0 * x[0] * b;
    g[1] = 200.0 * b;
    return a * a + 100.0 * b * b;
  };
  std::vector<double> x = {-1.2, 1.0};
  LbfgsOptions opts;
  opts.max_iters = 500;
  auto r = minimize_lbfgs(f, x, opts);
  CHECK(r.converged);
  CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(x[1] == doctest::Approx(1.0).epsilon(1e-6));
}
