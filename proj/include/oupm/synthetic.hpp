#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "oupm/core.hpp"
#include "oupm/model_io.hpp"
#include "oupm/trainer.hpp"

namespace oupm {

/// Control level change: from `start` seconds on, channel j sits at levels[j].
struct ControlStep {
  double start = 0.0;
  std::vector<double> levels;
};

/// Ground truth for a simulated dataset. The mean level is
/// mu = a . U + b on raw inputs U; volatility is `sigma` when `c` is empty,
/// otherwise softplus(c . U + d_off).
struct SynthSpec {
  double lambda = 10.0;
  std::vector<double> a = {2.0};
  double b = 1.0;
  double sigma = 0.5;
  std::vector<double> c;
  double d_off = 0.0;
  double dt = 0.01;
  double t0 = 0.0;
  std::size_t n = 1001;
  /// Samples [0, train_points] form the training window (train_points transitions).
  std::size_t train_points = 700;
  std::vector<ControlStep> schedule = default_schedule();
  std::vector<std::string> channel_names = {"u"};
  std::uint64_t seed = 0;

  std::size_t channels() const { return a.size(); }
  /// Single-channel piecewise-constant control with a step change shortly
  /// after the 7 s training window.
  static std::vector<ControlStep> default_schedule();
  /// Throws DataError describing the first problem found.
  void validate() const;
};

struct SynthData {
  InputSeries inputs;
  /// Raw target is transform_inverse(latent) with unit scale.
  ObservationSeries obs;
  std::vector<double> latent;
  /// Exact mean level mu_t at each sample.
  std::vector<double> mean_level;
};

/// Simulates X by drawing from the exact Gaussian transition at each step,
/// starting from the stationary law at the first input.
SynthData generate(const SynthSpec& spec);

/// Multi-channel surrogate: d channels of random piecewise-constant inputs
/// with disparate offsets and scales, a random linear mean, and a softplus
/// volatility.
struct SurrogateOptions {
  std::size_t channels = 16;
  std::size_t n = 100001;
  double dt = 0.1;
  double lambda = 2.0;
  /// Mean number of samples between level changes of a channel.
  double mean_hold = 25.0;
  /// Fixes the true parameters and the per-channel input offsets/scales.
  std::uint64_t truth_seed = 0;
  /// Fixes the input schedule; the returned spec's noise seed is also this.
  std::uint64_t input_seed = 0;
};
SynthSpec make_surrogate_spec(const SurrogateOptions& options);

/// Preprocessing for simulated data: unit target scale (the latent space is
/// the model space) and input statistics from the first `rows` samples.
PreprocessStats synthetic_preprocess(const InputSeries& inputs, std::size_t rows);

struct RecoveryRow {
  std::string name;
  double truth = 0.0;
  double estimate = 0.0;
  double pct_error = 0.0;
};

struct RecoveryResult {
  std::vector<RecoveryRow> rows;
  Model model;
  FitReport report;
  SynthData data;
};

/// Generates data, fits on the training window, and reports the percentage
/// error of lambda, each a_j, b, and sigma with the weights mapped back to raw
/// input units.
RecoveryResult verify_recovery(const SynthSpec& spec, const TrainConfig& config);

std::string recovery_table(const std::vector<RecoveryRow>& rows);

}  // namespace oupm
