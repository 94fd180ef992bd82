#include "oupm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "oupm/format.hpp"

namespace oupm {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

namespace {

void check_aligned(const PathEnsemble& ens, const ObservationSeries& obs, EvalWindow window) {
  if (obs.size() != ens.steps) {
    std::ostringstream msg;
    msg << "evaluation: ensemble has " << ens.steps << " steps but " << obs.size()
        << " observations";
    throw DataError(msg.str());
  }
  if (window.first_step >= ens.steps) throw DataError("evaluation: empty evaluation window");
}

}  // namespace

std::vector<double> standardized_errors(const PathEnsemble& ens, const ObservationSeries& obs,
                                        EvalWindow window) {
  check_aligned(ens, obs, window);
  std::vector<double> e;
  e.reserve(ens.steps - window.first_step);
  for (std::size_t i = window.first_step; i < ens.steps; ++i) {
    const double s = ens.summary.std[i];
    if (!(s > 0.0)) {
      std::ostringstream msg;
      msg << "evaluation: ensemble spread is zero at step " << i;
      throw DataError(msg.str(), i);
    }
    e.push_back((obs.y[i] - ens.summary.mean[i]) / s);
  }
  return e;
}

std::vector<double> pit_values(const PathEnsemble& ens, const ObservationSeries& obs,
                               EvalWindow window) {
  auto e = standardized_errors(ens, obs, window);
  for (double& v : e) v = normal_cdf(v);
  return e;
}

double ks_statistic(std::span<const double> pit) {
  if (pit.empty()) throw DataError("ks_statistic: empty sample");
  std::vector<double> u(pit.begin(), pit.end());
  for (std::size_t i = 0; i < u.size(); ++i)
    if (!(u[i] >= 0.0 && u[i] <= 1.0)) throw DataError("ks_statistic: value outside [0, 1]", i);
  std::sort(u.begin(), u.end());
  const double n = static_cast<double>(u.size());
  double d = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double above = std::abs(static_cast<double>(i + 1) / n - u[i]);
    const double below = std::abs(u[i] - static_cast<double>(i) / n);
    d = std::max({d, above, below});
  }
  return d;
}

std::vector<std::pair<double, double>> qq_points(std::span<const double> pit) {
  std::vector<double> u(pit.begin(), pit.end());
  std::sort(u.begin(), u.end());
  const double n = static_cast<double>(u.size());
  std::vector<std::pair<double, double>> pts;
  pts.reserve(u.size());
  for (std::size_t i = 0; i < u.size(); ++i)
    pts.emplace_back((static_cast<double>(i) + 0.5) / n, u[i]);
  return pts;
}

double nrmse(const PathEnsemble& ens, const ObservationSeries& obs, EvalWindow window) {
  check_aligned(ens, obs, window);
  double lo = obs.y[window.first_step], hi = lo, ss = 0.0;
  for (std::size_t i = window.first_step; i < ens.steps; ++i) {
    lo = std::min(lo, obs.y[i]);
    hi = std::max(hi, obs.y[i]);
    const double r = ens.summary.median[i] - obs.y[i];
    ss += r * r;
  }
  if (!(hi > lo)) throw DataError("nrmse: observed range is zero");
  const double rmse = std::sqrt(ss / static_cast<double>(ens.steps - window.first_step));
  return rmse / (hi - lo);
}

double coverage(const PathEnsemble& ens, const ObservationSeries& obs, double level,
                EvalWindow window) {
  if (!(level > 0.0 && level < 1.0)) throw DataError("coverage: level must lie in (0, 1)");
  check_aligned(ens, obs, window);
  const auto& lo = ens.summary.quantiles[ens.level_index(0.5 * (1.0 - level))];
  const auto& hi = ens.summary.quantiles[ens.level_index(0.5 * (1.0 + level))];
  std::size_t inside = 0;
  for (std::size_t i = window.first_step; i < ens.steps; ++i)
    if (obs.y[i] >= lo[i] && obs.y[i] <= hi[i]) ++inside;
  return static_cast<double>(inside) / static_cast<double>(ens.steps - window.first_step);
}

std::vector<double> observed_cumulative(const ObservationSeries& obs) {
  std::vector<double> cum(obs.size(), 0.0);
  for (std::size_t i = 1; i < obs.size(); ++i) cum[i] = cum[i - 1] + obs.y_raw[i];
  return cum;
}

double cumulative_band_fraction(const PathEnsemble& ens, const ObservationSeries& obs, int k,
                                EvalWindow window) {
  check_aligned(ens, obs, window);
  const auto cum = observed_cumulative(obs);
  std::size_t inside = 0;
  for (std::size_t i = window.first_step; i < ens.steps; ++i)
    if (cum[i] >= ens.cumulative.lower(k, i) && cum[i] <= ens.cumulative.upper(k, i)) ++inside;
  return static_cast<double>(inside) / static_cast<double>(ens.steps - window.first_step);
}

EvalReport evaluate(const PathEnsemble& ens, const ObservationSeries& obs, EvalWindow window) {
  EvalReport r;
  r.first_step = window.first_step;
  r.standardized_errors = standardized_errors(ens, obs, window);
  r.pit.reserve(r.standardized_errors.size());
  for (double e : r.standardized_errors) r.pit.push_back(normal_cdf(e));
  r.ks = ks_statistic(r.pit);
  r.qq = qq_points(r.pit);
  r.nrmse = nrmse(ens, obs, window);
  r.coverage_95 = coverage(ens, obs, 0.95, window);
  r.cumulative_inside_3sigma = cumulative_band_fraction(ens, obs, 3, window);
  return r;
}

std::string eval_report_json(const EvalReport& r) {
  nlohmann::json j;
  j["n"] = r.pit.size();
  j["first_step"] = r.first_step;
  j["ks"] = r.ks;
  j["nrmse"] = r.nrmse;
  j["coverage_95"] = r.coverage_95;
  j["cumulative_inside_3sigma"] = r.cumulative_inside_3sigma;
  j["space"] = "transformed";
  return j.dump(2) + "\n";
}

std::string pit_csv(const EvalReport& r, const PathEnsemble& ens) {
  std::string out = "step,time_s,standardized_error,pit\n";
  for (std::size_t k = 0; k < r.pit.size(); ++k) {
    const std::size_t i = r.first_step + k;
    out += std::to_string(i);
    out += ',';
    append_double(out, ens.time(i));
    out += ',';
    append_double(out, r.standardized_errors[k]);
    out += ',';
    append_double(out, r.pit[k]);
    out += '\n';
  }
  return out;
}

std::string qq_csv(const EvalReport& r) {
  std::string out = "theoretical,empirical\n";
  for (const auto& [t, e] : r.qq) {
    append_double(out, t);
    out += ',';
    append_double(out, e);
    out += '\n';
  }
  return out;
}

std::string pit_histogram_csv(const EvalReport& r, std::size_t bins) {
  std::vector<std::size_t> counts(bins, 0);
  for (double u : r.pit)
    ++counts[std::min(bins - 1, static_cast<std::size_t>(u * static_cast<double>(bins)))];
  std::string out = "bin_lo,bin_hi,count\n";
  for (std::size_t b = 0; b < bins; ++b) {
    append_double(out, static_cast<double>(b) / static_cast<double>(bins));
    out += ',';
    append_double(out, static_cast<double>(b + 1) / static_cast<double>(bins));
    out += ',' + std::to_string(counts[b]) + '\n';
  }
  return out;
}

}  // namespace oupm
