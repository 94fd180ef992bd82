#include "oupm/ou_process.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "oupm/parallel.hpp"
#include "oupm/rng.hpp"

namespace oupm {

namespace {

double dot(std::span<const double> w, std::span<const double> u) {
  double s = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * u[j];
  return s;
}

void check_dim(const ModelParams& params, std::span<const double> u_std) {
  if (u_std.size() != params.channels()) {
    std::ostringstream msg;
    msg << "input has " << u_std.size() << " channels, model expects " << params.channels();
    throw DimensionError(msg.str());
  }
}

}  // namespace

double mu_at(const ModelParams& params, std::span<const double> u_std) {
  check_dim(params, u_std);
  return dot(params.a, u_std) + params.b;
}

double sigma_at(const ModelParams& params, std::span<const double> u_std) {
  check_dim(params, u_std);
  return softplus(dot(params.c, u_std) + params.d_off);
}

double variance_kernel(double lambda, double dt) {
  const double x = 2.0 * lambda * dt;
  if (x == 0.0) return dt;
  return dt * (-std::expm1(-x) / x);
}

TransitionStats transition(double x_prev, double mu, double sigma, double lambda, double dt) {
  if (!(dt > 0.0)) throw DomainError("transition: dt must be positive");
  const double decay = std::exp(-lambda * dt);
  // x decay + mu (1 - decay), with 1 - decay from expm1 to keep small lambda*dt accurate
  const double mean = x_prev * decay - mu * std::expm1(-lambda * dt);
  const double variance = sigma * sigma * variance_kernel(lambda, dt);
  return {mean, variance};
}

TransitionStats transition(const ModelParams& params, double x_prev,
                           std::span<const double> u_std, double dt) {
  return transition(x_prev, mu_at(params, u_std), sigma_at(params, u_std), params.lambda(), dt);
}

double gaussian_logpdf(double x, double mean, double variance) {
  const double v = std::max(variance, kVarianceFloor);
  const double r = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * v) + r * r / v);
}

double transition_logpdf(const ModelParams& params, double x_prev, double x_next,
                         std::span<const double> u_std, double dt) {
  const auto t = transition(params, x_prev, u_std, dt);
  return gaussian_logpdf(x_next, t.mean, t.variance);
}

MomentPath propagate_moments(const ModelParams& params, double x0,
                             std::span<const double> u_std_rows, std::size_t rows, double dt) {
  const std::size_t d = params.channels();
  if (u_std_rows.size() != rows * d) throw DimensionError("propagate_moments: size mismatch");
  MomentPath out;
  out.mean.resize(rows);
  out.variance.resize(rows);
  if (rows == 0) return out;
  out.mean[0] = x0;
  out.variance[0] = 0.0;
  const double lambda = params.lambda();
  const double decay2 = std::exp(-2.0 * lambda * dt);
  for (std::size_t i = 0; i + 1 < rows; ++i) {
    const auto u = u_std_rows.subspan(i * d, d);
    const auto t = transition(out.mean[i], mu_at(params, u), sigma_at(params, u), lambda, dt);
    out.mean[i + 1] = t.mean;
    out.variance[i + 1] = out.variance[i] * decay2 + t.variance;
  }
  return out;
}

OracleResult euler_maruyama_oracle(const ModelParams& params, double x0,
                                   std::span<const double> u_std_rows, std::size_t rows,
                                   double dt, const OracleConfig& config) {
  const std::size_t d = params.channels();
  if (u_std_rows.size() != rows * d) throw DimensionError("euler_maruyama_oracle: size mismatch");
  if (rows == 0) throw DataError("euler_maruyama_oracle: empty input path");
  if (config.n_reps < 1000) throw DataError("euler_maruyama_oracle: n_reps must be >= 1000");
  if (!(config.fine_dt > 0.0) || !(dt > 0.0))
    throw DomainError("euler_maruyama_oracle: step sizes must be positive");
  const double ratio = dt / config.fine_dt;
  const auto substeps = static_cast<std::size_t>(std::llround(ratio));
  if (substeps == 0 || std::abs(ratio - static_cast<double>(substeps)) > 1e-9 * ratio)
    throw DataError("euler_maruyama_oracle: fine_dt must divide dt");
  const double h = dt / static_cast<double>(substeps);
  const double sqrt_h = std::sqrt(h);
  const double lambda = params.lambda();

  std::vector<double> mus(rows), sigmas(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const auto u = u_std_rows.subspan(i * d, d);
    mus[i] = mu_at(params, u);
    sigmas[i] = sigma_at(params, u);
  }

  // values[rep * rows + i] = X at coarse time i for replicate rep
  std::vector<double> values(config.n_reps * rows);
  parallel_for(config.n_reps, config.threads, [&](std::size_t rep) {
    const CounterRng rng(config.seed, rep);
    std::uint64_t k = 0;
    double x = x0;
    double* out = values.data() + rep * rows;
    out[0] = x;
    for (std::size_t i = 0; i + 1 < rows; ++i) {
      for (std::size_t s = 0; s < substeps; ++s)
        x += lambda * (mus[i] - x) * h + sigmas[i] * sqrt_h * rng.normal(k++);
      out[i + 1] = x;
    }
  });

  OracleResult res;
  res.mean.assign(rows, 0.0);
  res.variance.assign(rows, 0.0);
  res.mean_se.assign(rows, 0.0);
  const double n = static_cast<double>(config.n_reps);
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0.0;
    for (std::size_t r = 0; r < config.n_reps; ++r) s += values[r * rows + i];
    const double m = s / n;
    double ss = 0.0;
    for (std::size_t r = 0; r < config.n_reps; ++r) {
      const double e = values[r * rows + i] - m;
      ss += e * e;
    }
    res.mean[i] = m;
    res.variance[i] = ss / n;
    res.mean_se[i] = std::sqrt(ss / (n - 1.0) / n);
  }
  return res;
}

}  // namespace oupm
