#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "oupm/core.hpp"

namespace oupm {

/// Deterministic starting value: the mean level at the first input sample.
double initial_condition(const ModelParams& params, std::span<const double> u_std_0);

struct SamplerConfig {
  std::size_t paths = 10000;
  std::uint64_t seed = 0;
  /// 0 = hardware concurrency. Output does not depend on this.
  unsigned threads = 0;
  /// Quantile levels reported besides the median; must lie in (0, 1).
  std::vector<double> quantiles = {0.005, 0.025, 0.05, 0.25, 0.75, 0.95, 0.975, 0.995};
  /// Retain the full paths x time matrix.
  bool keep_paths = false;
  /// Time steps simulated per block in streaming mode.
  std::size_t block_steps = 128;
};

/// Per-timestep statistics across paths.
struct StepSummary {
  std::vector<double> mean;
  std::vector<double> std;
  std::vector<double> median;
  /// quantiles[q][i]: level q at step i.
  std::vector<std::vector<double>> quantiles;
};

/// Running sums per path in raw units, summarized across paths. Entry k is
/// the sum over steps 1..k; the deterministic initial value is excluded, so
/// entry 0 is zero.
struct CumulativeBands {
  std::vector<double> mean;
  std::vector<double> std;

  double lower(int k, std::size_t i) const { return mean[i] - k * std[i]; }
  double upper(int k, std::size_t i) const { return mean[i] + k * std[i]; }
};

struct PathEnsemble {
  std::size_t paths = 0;
  std::size_t steps = 0;
  double t0 = 0.0;
  double dt = 1.0;
  double target_scale = 1.0;
  std::vector<double> levels;
  /// Transformed (model) units.
  StepSummary summary;
  /// Raw units. Mean/std are taken over the per-path raw values; quantiles
  /// are the inverse transform of the transformed quantiles.
  StepSummary raw_summary;
  CumulativeBands cumulative;
  /// Path-major (paths x steps), transformed units; empty unless keep_paths.
  std::vector<double> path_values;

  double time(std::size_t i) const { return t0 + dt * static_cast<double>(i); }
  std::span<const double> path(std::size_t p) const {
    return {path_values.data() + p * steps, steps};
  }
  /// Index of a stored quantile level; throws if the level was not computed.
  std::size_t level_index(double level) const;
};

/// Samples `config.paths` trajectories X_{i+1} = m_i + sqrt(V_i) eta_i from
/// X_0 = initial_condition. Normal draws are keyed by (seed, path, step), so
/// the result is identical for any thread count.
PathEnsemble sample_paths(const ModelParams& params, const PreprocessStats& stats,
                          const InputSeries& inputs, const SamplerConfig& config);

/// Recomputes cumulative bands from retained paths.
CumulativeBands cumulative_stats(const PathEnsemble& ensemble);

/// Type-7 quantile (linear interpolation between order statistics) of sorted data.
double quantile_sorted(std::span<const double> sorted, double level);

std::string summary_csv(const PathEnsemble& ensemble);
std::string cumulative_csv(const PathEnsemble& ensemble);
std::string paths_csv(const PathEnsemble& ensemble);

}  // namespace oupm
