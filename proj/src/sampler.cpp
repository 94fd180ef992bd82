#include "oupm/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "oupm/format.hpp"
#include "oupm/ou_process.hpp"
#include "oupm/parallel.hpp"
#include "oupm/rng.hpp"

namespace oupm {

double initial_condition(const ModelParams& params, std::span<const double> u_std_0) {
  return mu_at(params, u_std_0);
}

double quantile_sorted(std::span<const double> sorted, double level) {
  if (sorted.empty()) throw DataError("quantile: empty sample");
  const double h = static_cast<double>(sorted.size() - 1) * level;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double w = h - static_cast<double>(lo);
  return sorted[lo] + w * (sorted[lo + 1] - sorted[lo]);
}

std::size_t PathEnsemble::level_index(double level) const {
  for (std::size_t q = 0; q < levels.size(); ++q)
    if (std::abs(levels[q] - level) < 1e-12) return q;
  std::ostringstream msg;
  msg << "ensemble has no stored quantile at level " << level;
  throw DataError(msg.str());
}

namespace {

void resize_summary(StepSummary& s, std::size_t steps, std::size_t n_levels) {
  s.mean.assign(steps, 0.0);
  s.std.assign(steps, 0.0);
  s.median.assign(steps, 0.0);
  s.quantiles.assign(n_levels, std::vector<double>(steps, 0.0));
}

// Population mean and std of values, summed in index order. Sums are taken
// relative to the first value so identical values give exactly zero spread.
std::pair<double, double> moments(std::span<const double> values) {
  const double n = static_cast<double>(values.size());
  const double shift = values.front();
  double s = 0.0;
  for (double v : values) s += v - shift;
  const double m = shift + s / n;
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return {m, std::sqrt(ss / n)};
}

// Summarizes one time step from the path values in `column` (transformed
// units) and `cum_column` (cumulative raw sums). `scratch` is reused storage.
void summarize_step(PathEnsemble& ens, std::size_t i, std::span<const double> column,
                    std::span<const double> cum_column, const PreprocessStats& stats,
                    std::vector<double>& scratch) {
  const auto [m, s] = moments(column);
  ens.summary.mean[i] = m;
  ens.summary.std[i] = s;

  scratch.assign(column.begin(), column.end());
  for (double& v : scratch) v = stats.to_raw(v);
  const auto [rm, rs] = moments(scratch);
  ens.raw_summary.mean[i] = rm;
  ens.raw_summary.std[i] = rs;

  scratch.assign(column.begin(), column.end());
  std::sort(scratch.begin(), scratch.end());
  const double med = quantile_sorted(scratch, 0.5);
  ens.summary.median[i] = med;
  ens.raw_summary.median[i] = stats.to_raw(med);
  for (std::size_t q = 0; q < ens.levels.size(); ++q) {
    const double v = quantile_sorted(scratch, ens.levels[q]);
    ens.summary.quantiles[q][i] = v;
    ens.raw_summary.quantiles[q][i] = stats.to_raw(v);
  }

  const auto [cm, cs] = moments(cum_column);
  ens.cumulative.mean[i] = cm;
  ens.cumulative.std[i] = cs;
}

}  // namespace

PathEnsemble sample_paths(const ModelParams& params, const PreprocessStats& stats,
                          const InputSeries& inputs, const SamplerConfig& config) {
  if (config.paths < 1) throw DataError("sample_paths: need at least one path");
  if (inputs.channels() != params.channels())
    throw DimensionError("sample_paths: input channels do not match the model");
  for (double q : config.quantiles)
    if (!(q > 0.0 && q < 1.0)) throw DataError("sample_paths: quantile levels must lie in (0,1)");

  const std::size_t n = inputs.size();
  const std::size_t m_paths = config.paths;
  const std::size_t d = inputs.channels();
  const std::vector<double> u_std = stats.standardize_all(inputs);
  const double lambda = params.lambda();
  const double dt = inputs.dt();

  // Step i -> i+1 is x * decay + drift[i] + scale[i] * eta.
  const double decay = std::exp(-lambda * dt);
  const double one_minus = -std::expm1(-lambda * dt);
  const double kernel = variance_kernel(lambda, dt);
  std::vector<double> drift(n), scale(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::span<const double> u(u_std.data() + i * d, d);
    drift[i] = mu_at(params, u) * one_minus;
    const double sigma = sigma_at(params, u);
    scale[i] = std::sqrt(sigma * sigma * kernel);
  }
  const double x0 = initial_condition(params, std::span<const double>(u_std.data(), d));

  PathEnsemble ens;
  ens.paths = m_paths;
  ens.steps = n;
  ens.t0 = inputs.t0();
  ens.dt = dt;
  ens.target_scale = stats.target_scale;
  ens.levels = config.quantiles;
  resize_summary(ens.summary, n, ens.levels.size());
  resize_summary(ens.raw_summary, n, ens.levels.size());
  ens.cumulative.mean.assign(n, 0.0);
  ens.cumulative.std.assign(n, 0.0);
  if (config.keep_paths) ens.path_values.assign(m_paths * n, 0.0);

  std::vector<double> state(m_paths, x0);
  std::vector<double> cum(m_paths, 0.0);
  const std::size_t block = std::max<std::size_t>(1, config.block_steps);
  // Step-major blocks: values[(i - begin) * M + p]
  std::vector<double> values(std::min(block, n) * m_paths);
  std::vector<double> cum_values(values.size());
  const unsigned threads = resolve_threads(config.threads);
  const std::size_t path_chunk = 256;
  const std::size_t n_chunks = (m_paths + path_chunk - 1) / path_chunk;
  std::vector<std::vector<double>> scratch(threads);

  for (std::size_t begin = 0; begin < n; begin += block) {
    const std::size_t end = std::min(begin + block, n);
    parallel_for(n_chunks, threads, [&](std::size_t chunk) {
      const std::size_t p_end = std::min((chunk + 1) * path_chunk, m_paths);
      for (std::size_t p = chunk * path_chunk; p < p_end; ++p) {
        const CounterRng rng(config.seed, p);
        double x = state[p];
        double c = cum[p];
        for (std::size_t i = begin; i < end; ++i) {
          if (i > 0) {
            x = x * decay + drift[i - 1] + scale[i - 1] * rng.normal(i - 1);
            c += stats.to_raw(x);
          }
          values[(i - begin) * m_paths + p] = x;
          cum_values[(i - begin) * m_paths + p] = c;
          if (config.keep_paths) ens.path_values[p * n + i] = x;
        }
        state[p] = x;
        cum[p] = c;
      }
    });
    // One task per step; a task's scratch buffer is picked by step index so
    // that no two concurrent tasks share it.
    const std::size_t n_steps = end - begin;
    const std::size_t groups = std::min<std::size_t>(threads, n_steps);
    parallel_for(groups, threads, [&](std::size_t g) {
      for (std::size_t k = g; k < n_steps; k += groups) {
        const std::span<const double> col(values.data() + k * m_paths, m_paths);
        const std::span<const double> ccol(cum_values.data() + k * m_paths, m_paths);
        summarize_step(ens, begin + k, col, ccol, stats, scratch[g]);
      }
    });
  }
  return ens;
}

CumulativeBands cumulative_stats(const PathEnsemble& ensemble) {
  if (ensemble.paths == 0 || ensemble.steps == 0)
    throw DataError("cumulative_stats: empty ensemble");
  if (ensemble.path_values.size() != ensemble.paths * ensemble.steps)
    throw DataError("cumulative_stats: ensemble was sampled without keep_paths");
  PreprocessStats scale_only;
  scale_only.target_scale = ensemble.target_scale;

  const std::size_t m = ensemble.paths, n = ensemble.steps;
  std::vector<double> cum(m, 0.0);
  CumulativeBands bands;
  bands.mean.assign(n, 0.0);
  bands.std.assign(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t p = 0; p < m; ++p) cum[p] += scale_only.to_raw(ensemble.path_values[p * n + i]);
    const auto [cm, cs] = moments(cum);
    bands.mean[i] = cm;
    bands.std[i] = cs;
  }
  return bands;
}

namespace {

std::string level_name(double level) {
  std::string s = "q";
  append_double(s, level);
  return s;
}

}  // namespace

std::string summary_csv(const PathEnsemble& ens) {
  std::string out = "time_s,mean,std,median";
  for (double l : ens.levels) out += "," + level_name(l);
  out += ",raw_mean,raw_std,raw_median";
  for (double l : ens.levels) out += ",raw_" + level_name(l);
  out += '\n';
  for (std::size_t i = 0; i < ens.steps; ++i) {
    append_double(out, ens.time(i));
    for (const StepSummary* s : {&ens.summary, &ens.raw_summary}) {
      for (double v : {s->mean[i], s->std[i], s->median[i]}) {
        out += ',';
        append_double(out, v);
      }
      for (const auto& q : s->quantiles) {
        out += ',';
        append_double(out, q[i]);
      }
    }
    out += '\n';
  }
  return out;
}

std::string cumulative_csv(const PathEnsemble& ens) {
  std::string out = "time_s,cum_mean,cum_std,lo1,hi1,lo2,hi2,lo3,hi3\n";
  for (std::size_t i = 0; i < ens.steps; ++i) {
    append_double(out, ens.time(i));
    for (double v : {ens.cumulative.mean[i], ens.cumulative.std[i]}) {
      out += ',';
      append_double(out, v);
    }
    for (int k = 1; k <= 3; ++k) {
      out += ',';
      append_double(out, ens.cumulative.lower(k, i));
      out += ',';
      append_double(out, ens.cumulative.upper(k, i));
    }
    out += '\n';
  }
  return out;
}

std::string paths_csv(const PathEnsemble& ens) {
  if (ens.path_values.empty()) throw DataError("paths_csv: ensemble has no retained paths");
  std::string out = "time_s";
  for (std::size_t p = 0; p < ens.paths; ++p) out += ",path" + std::to_string(p);
  out += '\n';
  for (std::size_t i = 0; i < ens.steps; ++i) {
    append_double(out, ens.time(i));
    for (std::size_t p = 0; p < ens.paths; ++p) {
      out += ',';
      append_double(out, ens.path_values[p * ens.steps + i]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace oupm
