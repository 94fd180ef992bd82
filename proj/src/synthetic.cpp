#include "oupm/synthetic.hpp"

#include <cmath>
#include <sstream>

#include "oupm/format.hpp"
#include "oupm/ou_process.hpp"
#include "oupm/rng.hpp"

namespace oupm {

std::vector<ControlStep> SynthSpec::default_schedule() {
  return {{0.0, {3.0}}, {1.2, {5.0}}, {2.5, {2.0}}, {3.6, {4.0}},
          {4.8, {6.0}}, {6.0, {3.5}}, {7.3, {9.0}}, {8.3, {4.0}}};
}

void SynthSpec::validate() const {
  auto fail = [](const std::string& what) { throw DataError("synth spec: " + what); };
  const std::size_t d = a.size();
  if (d == 0) fail("mean weights 'a' must be non-empty");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) fail("lambda must be positive");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) fail("sigma must be non-negative");
  if (!(dt > 0.0) || !std::isfinite(dt)) fail("dt must be positive");
  if (n < 2) fail("n must be at least 2");
  if (train_points < 1 || train_points >= n) fail("train_points must lie in [1, n)");
  if (channel_names.size() != d) fail("channel_names must have one entry per channel");
  if (!c.empty() && c.size() != d) fail("volatility weights 'c' must be empty or length d");
  if (schedule.empty()) fail("schedule must be non-empty");
  if (schedule.front().start > t0 + 1e-9 * dt) fail("schedule must start at or before t0");
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    const auto& s = schedule[k];
    if (!std::isfinite(s.start)) fail("schedule entry " + std::to_string(k) + " has bad start");
    if (k > 0 && !(s.start > schedule[k - 1].start))
      fail("schedule start times must be strictly increasing (entry " + std::to_string(k) + ")");
    if (s.levels.size() != d)
      fail("schedule entry " + std::to_string(k) + " has " + std::to_string(s.levels.size()) +
           " levels, expected " + std::to_string(d));
    for (double v : s.levels)
      if (!std::isfinite(v)) fail("schedule entry " + std::to_string(k) + " has non-finite level");
  }
}

namespace {

double dot(const std::vector<double>& w, std::span<const double> u) {
  double s = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * u[j];
  return s;
}

}  // namespace

SynthData generate(const SynthSpec& spec) {
  spec.validate();
  const std::size_t d = spec.channels();
  const std::size_t n = spec.n;

  std::vector<double> u(n * d);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = spec.t0 + spec.dt * static_cast<double>(i);
    while (k + 1 < spec.schedule.size() && spec.schedule[k + 1].start <= t + 1e-9 * spec.dt) ++k;
    std::copy(spec.schedule[k].levels.begin(), spec.schedule[k].levels.end(),
              u.begin() + static_cast<std::ptrdiff_t>(i * d));
  }

  SynthData data;
  data.inputs = InputSeries(spec.t0, spec.dt, spec.channel_names, u);
  data.latent.resize(n);
  data.mean_level.resize(n);
  std::vector<double> sigmas(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = data.inputs.row(i);
    data.mean_level[i] = dot(spec.a, row) + spec.b;
    sigmas[i] = spec.c.empty() ? spec.sigma : softplus(dot(spec.c, row) + spec.d_off);
  }

  const CounterRng rng(spec.seed, 0);
  const double stationary_sd = sigmas[0] / std::sqrt(2.0 * spec.lambda);
  data.latent[0] = data.mean_level[0] + stationary_sd * rng.normal(0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const auto t = transition(data.latent[i], data.mean_level[i], sigmas[i], spec.lambda, spec.dt);
    data.latent[i + 1] = t.mean + std::sqrt(t.variance) * rng.normal(i + 1);
  }

  PreprocessStats unit;
  unit.input_means.assign(d, 0.0);
  unit.input_stds.assign(d, 1.0);
  unit.constant_channel.assign(d, false);
  std::vector<double> raw(n);
  for (std::size_t i = 0; i < n; ++i) raw[i] = transform_inverse(data.latent[i]);
  data.obs = ObservationSeries::from_raw(spec.t0, spec.dt, std::move(raw), unit);
  return data;
}

SynthSpec make_surrogate_spec(const SurrogateOptions& opt) {
  const std::size_t d = opt.channels;
  if (d == 0) throw DataError("surrogate: need at least one channel");
  if (!(opt.mean_hold >= 1.0)) throw DataError("surrogate: mean_hold must be >= 1");

  // Truth and per-channel input statistics depend on truth_seed only.
  const CounterRng truth(opt.truth_seed, 0x7257);
  std::uint64_t k = 0;
  std::vector<double> offset(d), scale(d);
  for (std::size_t j = 0; j < d; ++j) {
    offset[j] = 50.0 * truth.normal(k++);
    scale[j] = std::pow(10.0, -1.0 + 3.0 * truth.uniform(k++));
  }

  SynthSpec spec;
  spec.lambda = opt.lambda;
  spec.dt = opt.dt;
  spec.n = opt.n;
  spec.train_points = opt.n - 1;
  spec.seed = opt.input_seed;
  spec.a.assign(d, 0.0);
  spec.c.assign(d, 0.0);
  spec.channel_names.clear();
  double b = 3.0, d_off = softplus_inverse(0.5);
  for (std::size_t j = 0; j < d; ++j) {
    spec.a[j] = 0.4 * truth.normal(k++) / scale[j];
    spec.c[j] = 0.15 * truth.normal(k++) / scale[j];
    b -= spec.a[j] * offset[j];
    d_off -= spec.c[j] * offset[j];
    spec.channel_names.push_back("x" + std::to_string(j + 1));
  }
  spec.b = b;
  spec.d_off = d_off;

  const CounterRng inputs(opt.input_seed, 0x1397);
  std::uint64_t c = 0;
  std::vector<double> level(d);
  for (std::size_t j = 0; j < d; ++j) level[j] = offset[j] + scale[j] * inputs.normal(c++);
  spec.schedule.clear();
  spec.schedule.push_back({0.0, level});
  const double p_switch = 1.0 / opt.mean_hold;
  for (std::size_t i = 1; i < opt.n; ++i) {
    bool changed = false;
    for (std::size_t j = 0; j < d; ++j) {
      if (inputs.uniform(c++) < p_switch) {
        level[j] = offset[j] + scale[j] * inputs.normal(c++);
        changed = true;
      }
    }
    if (changed) spec.schedule.push_back({opt.dt * static_cast<double>(i), level});
  }
  return spec;
}

PreprocessStats synthetic_preprocess(const InputSeries& inputs, std::size_t rows) {
  return fit_input_stats(inputs.slice(0, rows));
}

namespace {

double pct_error(double truth, double estimate) {
  return 100.0 * std::abs(estimate - truth) / std::abs(truth);
}

}  // namespace

RecoveryResult verify_recovery(const SynthSpec& spec, const TrainConfig& config) {
  RecoveryResult res;
  res.data = generate(spec);
  const std::size_t rows = spec.train_points + 1;
  const PreprocessStats stats = synthetic_preprocess(res.data.inputs, rows);

  const InputSeries train_in = res.data.inputs.slice(0, rows);
  ObservationSeries train_obs = res.data.obs;
  train_obs.y.resize(rows);
  train_obs.y_raw.resize(rows);
  const TransitionSet all = build_transitions(train_in, train_obs, stats);
  const auto split = split_tail(all, config.validation_fraction);
  res.report = fit(split.train, split.validation, config);

  res.model.channel_names = spec.channel_names;
  res.model.params = res.report.best_params;
  res.model.stats = stats;

  const auto& p = res.model.params;
  const std::size_t d = spec.channels();
  res.rows.push_back({"lambda", spec.lambda, p.lambda(), pct_error(spec.lambda, p.lambda())});
  double b_raw = p.b;
  for (std::size_t j = 0; j < d; ++j) {
    const double a_raw = p.a[j] / stats.input_stds[j];
    b_raw -= a_raw * stats.input_means[j];
    const std::string name = d == 1 ? "a" : "a[" + spec.channel_names[j] + "]";
    res.rows.push_back({name, spec.a[j], a_raw, pct_error(spec.a[j], a_raw)});
  }
  res.rows.push_back({"b", spec.b, b_raw, pct_error(spec.b, b_raw)});
  if (spec.c.empty()) {
    // Fitted volatility averaged over the training inputs
    double s = 0.0;
    for (std::size_t i = 0; i < rows; ++i)
      s += sigma_at(p, stats.standardize(train_in.row(i)));
    const double sigma_hat = s / static_cast<double>(rows);
    res.rows.push_back({"sigma", spec.sigma, sigma_hat, pct_error(spec.sigma, sigma_hat)});
  }
  return res;
}

std::string recovery_table(const std::vector<RecoveryRow>& rows) {
  std::ostringstream out;
  out << "parameter,true,estimated,pct_error\n";
  for (const auto& r : rows)
    out << r.name << ',' << format_double(r.truth) << ',' << format_double(r.estimate) << ','
        << format_double(r.pct_error) << '\n';
  return out.str();
}

}  // namespace oupm
