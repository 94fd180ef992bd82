#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "oupm/core.hpp"

namespace oupm {

/// Lower bound applied to the transition variance inside log-densities.
inline constexpr double kVarianceFloor = 1e-12;

/// Conditional mean and variance of X(t + dt) given X(t).
struct TransitionStats {
  double mean = 0.0;
  double variance = 0.0;
};

/// mu = a . u_std + b
double mu_at(const ModelParams& params, std::span<const double> u_std);
/// sigma = softplus(c . u_std + d_off), always > 0 for finite pre-activations
double sigma_at(const ModelParams& params, std::span<const double> u_std);

/// Integral of exp(-2 lambda (dt - s)) over [0, dt]; equals dt when lambda == 0.
double variance_kernel(double lambda, double dt);

/// Exact OU transition over one step with mu, sigma, lambda held constant:
///   m = x e^{-lambda dt} + mu (1 - e^{-lambda dt})
///   V = sigma^2 (1 - e^{-2 lambda dt}) / (2 lambda)
TransitionStats transition(double x_prev, double mu, double sigma, double lambda, double dt);

/// Transition with mu and sigma evaluated at the interval's starting input (zero-order hold).
TransitionStats transition(const ModelParams& params, double x_prev,
                           std::span<const double> u_std, double dt);

/// Gaussian log-density, variance clamped below at kVarianceFloor.
double gaussian_logpdf(double x, double mean, double variance);

double transition_logpdf(const ModelParams& params, double x_prev, double x_next,
                         std::span<const double> u_std, double dt);

/// Exact marginal moments of X at each sample time when started from a
/// deterministic x0. `u_std_rows` is row-major with `rows` rows; entry i of the
/// result is the time of row i, and row i drives the step i -> i+1.
struct MomentPath {
  std::vector<double> mean;
  std::vector<double> variance;
};
MomentPath propagate_moments(const ModelParams& params, double x0,
                             std::span<const double> u_std_rows, std::size_t rows, double dt);

/// Monte-Carlo mean/variance of an Euler-Maruyama discretization of
/// dX = lambda (mu_t - X) dt + sigma_t dW on a fine grid, reported at the
/// coarse sample times. Used only to check the closed-form transition.
struct OracleResult {
  std::vector<double> mean;
  std::vector<double> variance;
  /// Standard error of `mean` at each coarse time.
  std::vector<double> mean_se;
};

struct OracleConfig {
  double fine_dt = 1e-5;
  std::size_t n_reps = 10000;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

OracleResult euler_maruyama_oracle(const ModelParams& params, double x0,
                                   std::span<const double> u_std_rows, std::size_t rows,
                                   double dt, const OracleConfig& config);

}  // namespace oupm
