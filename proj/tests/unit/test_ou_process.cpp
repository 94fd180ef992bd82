#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oupm/error.hpp"
#include "oupm/ou_process.hpp"

using namespace oupm;

namespace {

ModelParams constant_model(double mu, double sigma, double lambda) {
  ModelParams p(1);
  p.b = mu;
  p.d_off = softplus_inverse(sigma);
  p.lambda_raw = softplus_inverse(lambda);
  return p;
}

}  // namespace

TEST_CASE("transition closed form") {
  const auto t = transition(0.0, 2.0, 1.0, 1.0, 0.5);
  CHECK(t.mean == doctest::Approx(0.7869386805747332).epsilon(1e-14));
  CHECK(t.variance == doctest::Approx(0.31606027941427883).epsilon(1e-14));
}

TEST_CASE("gaussian log density") {
  CHECK(gaussian_logpdf(2.0, 0.0, 1.0) == doctest::Approx(-2.9189385332046727).epsilon(1e-14));
  CHECK(gaussian_logpdf(0.0, 0.0, 0.0) == doctest::Approx(-0.5 * std::log(2 * std::numbers::pi * kVarianceFloor)));
}

TEST_CASE("mu and sigma from the standardized input") {
  ModelParams p(2);
  p.a = {1.0, -2.0};
  p.b = 0.5;
  p.c = {0.0, 1.0};
  p.d_off = -1.0;
  const std::vector<double> u = {3.0, 1.0};
  CHECK(mu_at(p, u) == doctest::Approx(1.5));
  CHECK(sigma_at(p, u) == doctest::Approx(std::log(2.0)));
  const std::vector<double> wrong = {1.0};
  CHECK_THROWS_AS(mu_at(p, wrong), DimensionError);
  CHECK_THROWS_AS(sigma_at(p, wrong), DimensionError);
}

TEST_CASE("variance kernel limits") {
  CHECK(variance_kernel(0.0, 0.3) == 0.3);
  CHECK(variance_kernel(1e-12, 0.3) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(variance_kernel(1e6, 1.0) == doctest::Approx(0.5e-6));
  for (double lambda : {1e-8, 1e-4, 0.1, 3.0}) {
    const double dt = 0.7;
    const double direct = (1.0 - std::exp(-2.0 * lambda * dt)) / (2.0 * lambda);
    CHECK(variance_kernel(lambda, dt) == doctest::Approx(direct).epsilon(1e-7));
  }
}

TEST_CASE("mean is a convex combination and variance stays above the floor") {
  for (double lambda : {1e-3, 0.5, 10.0, 200.0}) {
    for (double dt : {1e-4, 0.01, 1.0}) {
      const auto t = transition(-1.0, 3.0, 0.2, lambda, dt);
      CHECK(t.mean >= -1.0);
      CHECK(t.mean <= 3.0);
      CHECK(t.variance > kVarianceFloor);
      const double w = std::exp(-lambda * dt);
      CHECK(t.mean == doctest::Approx(w * -1.0 + (1.0 - w) * 3.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("small dt shrinks mean change and variance linearly") {
  const double x = 0.4, mu = 2.0, sigma = 0.7, lambda = 3.0;
  const auto a = transition(x, mu, sigma, lambda, 1e-6);
  const auto b = transition(x, mu, sigma, lambda, 1e-7);
  CHECK((a.mean - x) / (b.mean - x) == doctest::Approx(10.0).epsilon(1e-5));
  CHECK(a.variance / b.variance == doctest::Approx(10.0).epsilon(1e-5));
  CHECK((a.mean - x) / 1e-6 == doctest::Approx(lambda * (mu - x)).epsilon(1e-5));
  CHECK(a.variance / 1e-6 == doctest::Approx(sigma * sigma).epsilon(1e-5));
}

TEST_CASE("Chapman-Kolmogorov on constant inputs") {
  const double mu = 1.3, sigma = 0.8, lambda = 2.5, dt = 0.4, x = -0.2;
  const auto full = transition(x, mu, sigma, lambda, dt);
  const auto half = transition(x, mu, sigma, lambda, dt / 2);
  const auto second = transition(half.mean, mu, sigma, lambda, dt / 2);
  const double var = half.variance * std::exp(-lambda * dt) + second.variance;
  CHECK(std::abs(second.mean - full.mean) <= 1e-10);
  CHECK(std::abs(var - full.variance) <= 1e-10);
}

TEST_CASE("Brownian limit when lambda vanishes") {
  ModelParams p(1);
  p.b = 5.0;
  p.d_off = softplus_inverse(0.6);
  p.lambda_raw = -60.0;
  const std::vector<double> u(11, 0.0);
  const auto path = propagate_moments(p, 0.0, u, 11, 0.1);
  for (std::size_t i = 0; i < 11; ++i) {
    CHECK(path.variance[i] == doctest::Approx(0.36 * 0.1 * static_cast<double>(i)).epsilon(1e-9));
    CHECK(std::abs(path.mean[i]) < 1e-12);
  }
}

TEST_CASE("propagate_moments matches iterated transitions") {
  ModelParams p(1);
  p.a = {0.5};
  p.b = 1.0;
  p.c = {0.3};
  p.d_off = -1.0;
  p.lambda_raw = 0.2;
  const std::vector<double> u = {1.0, -1.0, 0.5, 2.0};
  const auto path = propagate_moments(p, 0.3, u, 4, 0.25);
  double m = 0.3, v = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const std::span<const double> ui(u.data() + i, 1);
    const auto t = transition(p, m, ui, 0.25);
    const double w = std::exp(-p.lambda() * 0.25);
    v = v * w * w + t.variance;
    m = t.mean;
    CHECK(path.mean[i + 1] == doctest::Approx(m).epsilon(1e-14));
    CHECK(path.variance[i + 1] == doctest::Approx(v).epsilon(1e-14));
  }
}

TEST_CASE("Euler-Maruyama oracle agrees with the closed form") {
  const auto p = constant_model(1.5, 0.7, 4.0);
  const std::vector<double> u(2, 0.0);
  OracleConfig cfg;
  cfg.fine_dt = 0.2 / 1000;
  cfg.n_reps = 4000;
  cfg.seed = 11;
  const auto res = euler_maruyama_oracle(p, -0.5, u, 2, 0.2, cfg);
  const auto t = transition(p, -0.5, std::span<const double>(u.data(), 1), 0.2);
  CHECK(std::abs(res.mean[1] - t.mean) <= 3.0 * res.mean_se[1]);
  CHECK(std::abs(res.variance[1] / t.variance - 1.0) <= 0.08);
  CHECK(res.mean[0] == -0.5);
}

TEST_CASE("oracle with vanishing sigma is deterministic") {
  ModelParams p(1);
  p.b = 2.0;
  p.d_off = -80.0;
  p.lambda_raw = softplus_inverse(1.0);
  const std::vector<double> u(2, 0.0);
  OracleConfig cfg;
  cfg.fine_dt = 1e-4;
  cfg.n_reps = 1000;
  const auto res = euler_maruyama_oracle(p, 0.0, u, 2, 0.1, cfg);
  CHECK(res.variance[1] < 1e-25);
  CHECK(res.mean[1] == doctest::Approx(2.0 * (1.0 - std::exp(-0.1))).epsilon(1e-4));
}

TEST_CASE("oracle argument checks") {
  const auto p = constant_model(0.0, 1.0, 1.0);
  const std::vector<double> u(2, 0.0);
  OracleConfig cfg;
  cfg.n_reps = 10;
  CHECK_THROWS_AS(euler_maruyama_oracle(p, 0.0, u, 2, 0.1, cfg), DataError);
  cfg.n_reps = 1000;
  cfg.fine_dt = 0.03;
  CHECK_THROWS_AS(euler_maruyama_oracle(p, 0.0, u, 2, 0.1, cfg), DataError);
}

TEST_CASE("oracle is deterministic for a seed and thread count independent") {
  const auto p = constant_model(1.0, 0.5, 2.0);
  const std::vector<double> u(3, 0.0);
  OracleConfig cfg;
  cfg.fine_dt = 1e-3;
  cfg.n_reps = 1000;
  cfg.seed = 5;
  cfg.threads = 1;
  const auto a = euler_maruyama_oracle(p, 0.0, u, 3, 0.1, cfg);
  cfg.threads = 4;
  const auto b = euler_maruyama_oracle(p, 0.0, u, 3, 0.1, cfg);
  CHECK(a.mean == b.mean);
  CHECK(a.variance == b.variance);
}
