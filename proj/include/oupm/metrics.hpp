#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "oupm/core.hpp"
#include "oupm/sampler.hpp"

namespace oupm {

double normal_cdf(double x);

/// Steps [first_step, N) are compared. Step 0 of an ensemble is the
/// deterministic initial condition (zero spread), so evaluation starts at 1.
struct EvalWindow {
  std::size_t first_step = 1;
};

/// Standardized errors e_i = (y_i - mean_i) / std_i using the ensemble's
/// empirical moments in transformed units.
std::vector<double> standardized_errors(const PathEnsemble& ensemble, const ObservationSeries& obs,
                                        EvalWindow window = {});

/// PIT_i = Phi(e_i). Throws DataError on a zero-spread step.
std::vector<double> pit_values(const PathEnsemble& ensemble, const ObservationSeries& obs,
                               EvalWindow window = {});

/// Kolmogorov-Smirnov distance of the PIT sample from Uniform(0, 1).
double ks_statistic(std::span<const double> pit);

/// (theoretical, empirical) pairs: plotting position (i - 0.5)/n against the
/// i-th smallest PIT value.
std::vector<std::pair<double, double>> qq_points(std::span<const double> pit);

/// RMSE of the ensemble median against observations over the observed range.
double nrmse(const PathEnsemble& ensemble, const ObservationSeries& obs, EvalWindow window = {});

/// Fraction of steps whose observation lies in the central `level` band.
double coverage(const PathEnsemble& ensemble, const ObservationSeries& obs, double level,
                EvalWindow window = {});

/// Running sum of the raw observations over steps 1..k (entry 0 is zero).
std::vector<double> observed_cumulative(const ObservationSeries& obs);

/// Fraction of window steps where the observed cumulative sum lies within
/// mean +/- k std of the ensemble's cumulative bands.
double cumulative_band_fraction(const PathEnsemble& ensemble, const ObservationSeries& obs, int k,
                                EvalWindow window = {});

struct EvalReport {
  std::vector<double> pit;
  double ks = 0.0;
  std::vector<std::pair<double, double>> qq;
  double nrmse = 0.0;
  double coverage_95 = 0.0;
  std::vector<double> standardized_errors;
  /// Fraction of steps with the observed cumulative sum inside the +/-3 std band.
  double cumulative_inside_3sigma = 0.0;
  std::size_t first_step = 1;
};

EvalReport evaluate(const PathEnsemble& ensemble, const ObservationSeries& obs,
                    EvalWindow window = {});

/// JSON text with the scalar metrics and sample sizes.
std::string eval_report_json(const EvalReport& report);
/// step,time_s,standardized_error,pit
std::string pit_csv(const EvalReport& report, const PathEnsemble& ensemble);
std::string qq_csv(const EvalReport& report);
/// Equal-width PIT histogram: bin_lo,bin_hi,count
std::string pit_histogram_csv(const EvalReport& report, std::size_t bins = 20);

}  // namespace oupm
