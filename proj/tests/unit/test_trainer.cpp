#include <doctest.h>

#include <cmath>
#include <random>

#include "oupm/error.hpp"
#include "oupm/ou_process.hpp"
#include "oupm/synthetic.hpp"
#include "oupm/trainer.hpp"

using namespace oupm;

namespace {

// Loss evaluated independently in long double, straight from the formulas.
long double reference_loss(std::span<const double> theta, std::size_t d, const TransitionSet& set) {
  auto softplus_l = [](long double x) {
    return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  };
  const long double lambda = softplus_l(theta[2 * d + 2]);
  long double total = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto e = set[i];
    long double mu = theta[d], pre = theta[2 * d + 1];
    for (std::size_t j = 0; j < d; ++j) {
      mu += static_cast<long double>(theta[j]) * e.u_std[j];
      pre += static_cast<long double>(theta[d + 1 + j]) * e.u_std[j];
    }
    const long double sigma = softplus_l(pre);
    const long double w = std::exp(-lambda * e.dt);
    const long double m = e.y_prev * w + mu * (1 - w);
    const long double v = sigma * sigma * (1 - std::exp(-2 * lambda * e.dt)) / (2 * lambda);
    const long double r = e.y_next - m;
    total += std::log(v) + r * r / v;
  }
  return total;
}

TransitionSet random_set(std::mt19937_64& gen, std::size_t d, std::size_t n) {
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> dt(0.005, 0.5);
  TransitionSet set(d);
  std::vector<double> u(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& x : u) x = z(gen);
    set.push_back(u, z(gen), z(gen), dt(gen));
  }
  return set;
}

ModelParams random_params(std::mt19937_64& gen, std::size_t d) {
  std::normal_distribution<double> z;
  ModelParams p(d);
  for (auto& x : p.a) x = 0.5 * z(gen);
  for (auto& x : p.c) x = 0.3 * z(gen);
  p.b = z(gen);
  p.d_off = 0.5 * z(gen);
  p.lambda_raw = z(gen);
  return p;
}

}  // namespace

TEST_CASE("loss examples") {
  TransitionSet set(1);
  const std::vector<double> u = {0.0};
  // lambda -> huge makes m = mu; choose sigma so that V = 1 and V = e.
  ModelParams p(1);
  p.b = 0.7;
  const double lambda = 3.0, dt = 0.2;
  p.lambda_raw = softplus_inverse(lambda);
  const double kernel = variance_kernel(lambda, dt);
  const auto t0 = transition(0.1, 0.7, 1.0, lambda, dt);
  set.push_back(u, 0.1, t0.mean, dt);
  p.d_off = softplus_inverse(std::sqrt(1.0 / kernel));
  CHECK(std::abs(nll_loss(p, set)) < 1e-12);
  p.d_off = softplus_inverse(std::sqrt(std::exp(1.0) / kernel));
  CHECK(nll_loss(p, set) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("loss is additive over examples") {
  std::mt19937_64 gen(3);
  const auto set = random_set(gen, 3, 40);
  const auto p = random_params(gen, 3);
  double sum = 0.0;
  for (std::size_t i = 0; i < set.size(); ++i) sum += nll_loss(p, set.slice(i, i + 1));
  CHECK(nll_loss(p, set) == doctest::Approx(sum).epsilon(1e-12));

  auto g = nll_gradient(p, set);
  std::vector<double> gsum(g.size(), 0.0);
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto gi = nll_gradient(p, set.slice(i, i + 1));
    for (std::size_t k = 0; k < g.size(); ++k) gsum[k] += gi[k];
  }
  for (std::size_t k = 0; k < g.size(); ++k) CHECK(g[k] == doctest::Approx(gsum[k]).epsilon(1e-10));
}

TEST_CASE("analytic gradient matches finite differences of an independent loss") {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t d = 1 + static_cast<std::size_t>(trial);
    const auto set = random_set(gen, d, 25);
    const auto p = random_params(gen, d);
    const auto g = nll_gradient(p, set);
    auto theta = p.flatten();
    CHECK(static_cast<double>(reference_loss(theta, d, set)) ==
          doctest::Approx(nll_loss(p, set)).epsilon(1e-10));
    for (std::size_t k = 0; k < theta.size(); ++k) {
      const double h = 1e-6 * std::max(1.0, std::abs(theta[k]));
      const double keep = theta[k];
      theta[k] = keep + h;
      const long double up = reference_loss(theta, d, set);
      theta[k] = keep - h;
      const long double down = reference_loss(theta, d, set);
      theta[k] = keep;
      const double fd = static_cast<double>((up - down) / (2.0L * h));
      const double rel = std::abs(g[k] - fd) / std::max({std::abs(fd), std::abs(g[k]), 1e-8});
      CHECK(rel <= 1e-5);
    }
  }
}

TEST_CASE("gradient for lambda near zero uses the series branch") {
  std::mt19937_64 gen(5);
  const auto set = random_set(gen, 1, 10);
  auto p = random_params(gen, 1);
  p.lambda_raw = -8.0;
  const auto g = nll_gradient(p, set);
  auto theta = p.flatten();
  const std::size_t k = theta.size() - 1;
  const double h = 1e-6 * 8.0;
  theta[k] = -8.0 + h;
  const long double up = reference_loss(theta, 1, set);
  theta[k] = -8.0 - h;
  const long double down = reference_loss(theta, 1, set);
  const double fd = static_cast<double>((up - down) / (2.0L * h));
  CHECK(g[k] == doctest::Approx(fd).epsilon(1e-5));
}

TEST_CASE("gradient wrt a_j vanishes when channel j is zero") {
  std::mt19937_64 gen(9);
  auto set = random_set(gen, 2, 20);
  TransitionSet zeroed(2);
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto e = set[i];
    const std::vector<double> u = {e.u_std[0], 0.0};
    zeroed.push_back(u, e.y_prev, e.y_next, e.dt);
  }
  const auto g = nll_gradient(random_params(gen, 2), zeroed);
  CHECK(g[1] == 0.0);
  CHECK(g[4] == 0.0);
}

TEST_CASE("build_transitions counts and alignment") {
  SynthSpec spec;
  spec.seed = 1;
  const auto data = generate(spec);
  const auto stats = synthetic_preprocess(data.inputs, 701);
  const auto inputs = data.inputs.slice(0, 701);
  ObservationSeries obs = data.obs;
  obs.y.resize(701);
  obs.y_raw.resize(701);
  const auto set = build_transitions(inputs, obs, stats);
  CHECK(set.size() == 700);
  CHECK(set[0].y_prev == obs.y[0]);
  CHECK(set[0].y_next == obs.y[1]);
  CHECK(set[699].y_next == obs.y[700]);
  CHECK(set[5].u_std[0] == doctest::Approx((inputs.row(5)[0] - stats.input_means[0]) / stats.input_stds[0]));

  const auto two = build_transitions(inputs.slice(0, 2), ObservationSeries{0.0, 0.01, {1.0, 1.0}, {0.0, 0.0}}, stats);
  CHECK(two.size() == 1);
}

TEST_CASE("build_transitions errors") {
  const InputSeries in(0.0, 1.0, {"u"}, {1.0, 2.0, 3.0, 4.0});
  const auto stats = fit_input_stats(in);
  ObservationSeries obs{0.0, 1.0, {1, 1, 1}, {0, 0, 0}};
  CHECK_THROWS_AS(build_transitions(in, obs, stats), DataError);
  obs = {0.0, 1.0, {1, 1, 1, 1}, {0, 0, std::nan(""), 0}};
  try {
    build_transitions(in, obs, stats);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(e.index() == 2);
  }
  obs = {0.0, 2.0, {1, 1, 1, 1}, {0, 0, 0, 0}};
  CHECK_THROWS_AS(build_transitions(in, obs, stats), DataError);
}

TEST_CASE("non-finite loss reports the example index") {
  TransitionSet set(1);
  const std::vector<double> u = {0.0};
  set.push_back(u, 0.0, 0.1, 0.1);
  set.push_back(u, 0.0, 1e300, 0.1);
  ModelParams p(1);
  try {
    nll_loss(p, set);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(e.index() == 1);
  }
}

TEST_CASE("split helpers") {
  std::mt19937_64 gen(1);
  const auto set = random_set(gen, 1, 100);
  const auto s = split_tail(set, 0.15);
  CHECK(s.train.size() == 85);
  CHECK(s.validation.size() == 15);
  CHECK(s.validation[0].y_prev == set[85].y_prev);
  CHECK_THROWS_AS(split_tail(set, 0.0), DataError);
  const std::vector<std::size_t> idx = {3, 50};
  const auto t = split_by_indices(set, idx);
  CHECK(t.validation.size() == 2);
  CHECK(t.validation[1].y_next == set[50].y_next);
  CHECK(t.train.size() == 98);
}

TEST_CASE("fit rejects zero epochs and empty sets") {
  std::mt19937_64 gen(2);
  const auto set = random_set(gen, 1, 20);
  TrainConfig cfg;
  cfg.epochs = 0;
  CHECK_THROWS_AS(fit(set, set, cfg), Error);
  cfg.epochs = 1;
  CHECK_THROWS_AS(fit(set, TransitionSet(1), cfg), Error);
  const auto r = fit(set, set, cfg);
  CHECK(r.train_loss_curve.size() == 1);
  CHECK(r.val_loss_curve.size() == 1);
  CHECK(r.best_epoch == 0);
}

TEST_CASE("fit is deterministic and early stopping picks the best epoch") {
  SynthSpec spec;
  spec.seed = 4;
  const auto data = generate(spec);
  const auto stats = synthetic_preprocess(data.inputs, 701);
  const auto all = build_transitions(data.inputs, data.obs, stats).slice(0, 700);
  const auto split = split_tail(all, 0.15);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.seed = 12;
  cfg.constant_volatility = true;
  const auto a = fit(split.train, split.validation, cfg);
  const auto b = fit(split.train, split.validation, cfg);
  CHECK(a.best_params.flatten() == b.best_params.flatten());
  CHECK(a.train_loss_curve == b.train_loss_curve);
  CHECK(a.val_loss_curve == b.val_loss_curve);
  const auto min_it = std::min_element(a.val_loss_curve.begin(), a.val_loss_curve.end());
  CHECK(a.best_epoch == static_cast<std::size_t>(min_it - a.val_loss_curve.begin()));
  CHECK(a.val_loss_curve[a.best_epoch] <= a.val_loss_curve[0]);
  CHECK(a.best_params.c[0] == 0.0);
  CHECK(nll_loss(a.best_params, split.validation) / static_cast<double>(split.validation.size()) ==
        doctest::Approx(a.val_loss_curve[a.best_epoch]).epsilon(1e-12));
}

TEST_CASE("fitted loss does not exceed the true-parameter loss in sample") {
  SynthSpec spec;
  spec.seed = 8;
  const auto data = generate(spec);
  const auto stats = synthetic_preprocess(data.inputs, 701);
  const auto train = build_transitions(data.inputs, data.obs, stats).slice(0, 700);
  ModelParams truth(1);
  truth.a = {spec.a[0] * stats.input_stds[0]};
  truth.b = spec.b + spec.a[0] * stats.input_means[0];
  truth.d_off = softplus_inverse(spec.sigma);
  truth.lambda_raw = softplus_inverse(spec.lambda);
  TrainConfig cfg;
  cfg.epochs = 1000;
  cfg.early_stopping = false;
  cfg.constant_volatility = true;
  cfg.seed = 3;
  const auto r = fit(train, train.slice(0, 10), cfg);
  CHECK(nll_loss(r.best_params, train) <= nll_loss(truth, train));
}

TEST_CASE("fit_report_csv has one row per epoch") {
  FitReport r;
  r.train_loss_curve = {1.0, 0.5};
  r.val_loss_curve = {2.0, 0.25};
  const auto csv = fit_report_csv(r);
  CHECK(csv.rfind("epoch,train_loss,val_loss\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}
