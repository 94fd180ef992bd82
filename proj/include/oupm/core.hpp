#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "oupm/error.hpp"

namespace oupm {

/// Piecewise log-linear map applied to the scaled target:
/// log(z) below 1, z - 1 at and above 1. Continuous and strictly increasing.
/// Throws DomainError for z <= 0.
double transform_forward(double z);

/// Exact inverse of transform_forward: exp(y) below 0, y + 1 otherwise.
double transform_inverse(double y);

/// Default floor applied to scaled zero targets before the log branch.
inline constexpr double kDefaultZeroFloor = 1e-9;

double softplus(double x);
/// Inverse of softplus; requires y > 0.
double softplus_inverse(double y);
double sigmoid(double x);

/// Uniformly sampled multichannel input signal, stored row-major (N x d).
class InputSeries {
 public:
  InputSeries() = default;
  InputSeries(double t0, double dt, std::vector<std::string> channel_names,
              std::vector<double> values);

  double t0() const { return t0_; }
  double dt() const { return dt_; }
  std::size_t size() const { return n_; }
  std::size_t channels() const { return names_.size(); }
  const std::vector<std::string>& channel_names() const { return names_; }
  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * channels(), channels()};
  }
  const std::vector<double>& values() const { return values_; }
  double time(std::size_t i) const { return t0_ + dt_ * static_cast<double>(i); }

  /// Rows [begin, end) as a new series starting at time(begin).
  InputSeries slice(std::size_t begin, std::size_t end) const;

 private:
  double t0_ = 0.0;
  double dt_ = 1.0;
  std::size_t n_ = 0;
  std::vector<std::string> names_;
  std::vector<double> values_;
};

/// Per-channel standardization and target scale, frozen at training time.
struct PreprocessStats {
  double target_scale = 1.0;
  std::vector<double> input_means;
  std::vector<double> input_stds;
  /// Channels whose training std was zero and replaced by 1.
  std::vector<bool> constant_channel;
  double zero_floor = kDefaultZeroFloor;

  std::size_t channels() const { return input_means.size(); }
  bool any_constant_channel() const;

  /// Raw target -> transformed units.
  double to_model(double raw) const;
  /// Transformed units -> raw target.
  double to_raw(double y) const { return transform_inverse(y) * target_scale; }

  void standardize(std::span<const double> u, std::span<double> out) const;
  std::vector<double> standardize(std::span<const double> u) const;
  /// Standardized copy of every row of `inputs`, row-major.
  std::vector<double> standardize_all(const InputSeries& inputs) const;
};

/// Target scale (population std of the raw target) plus per-channel input
/// statistics. A constant input channel keeps std 1 and is flagged.
PreprocessStats fit_preprocess(std::span<const double> train_raw_target,
                               const InputSeries& train_inputs);
/// Input statistics only; target_scale is left at 1.
PreprocessStats fit_input_stats(const InputSeries& train_inputs);

/// Scalar target series held in raw and transformed units.
struct ObservationSeries {
  double t0 = 0.0;
  double dt = 1.0;
  std::vector<double> y_raw;
  std::vector<double> y;

  std::size_t size() const { return y.size(); }

  static ObservationSeries from_raw(double t0, double dt, std::vector<double> raw,
                                    const PreprocessStats& stats);
};

/// Trainable parameters. Mean level mu = a.u + b, volatility
/// sigma = softplus(c.u + d_off), reversion rate lambda = softplus(lambda_raw),
/// with u the standardized input.
struct ModelParams {
  std::vector<double> a;
  double b = 0.0;
  std::vector<double> c;
  double d_off = 0.0;
  double lambda_raw = 0.0;

  explicit ModelParams(std::size_t d = 0) : a(d, 0.0), c(d, 0.0) {}

  std::size_t channels() const { return a.size(); }
  std::size_t size() const { return 2 * a.size() + 3; }
  double lambda() const { return softplus(lambda_raw); }

  /// Flat layout (a..., b, c..., d_off, lambda_raw).
  std::vector<double> flatten() const;
  static ModelParams unflatten(std::span<const double> theta, std::size_t d);
};

// Population statistics.
double mean_of(std::span<const double> x);
double pstd_of(std::span<const double> x);

}  // namespace oupm
