#include "oupm/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace oupm {

double transform_forward(double z) {
  if (!(z > 0.0)) {
    std::ostringstream msg;
    msg << "transform_forward: scaled target must be positive, got " << z;
    throw DomainError(msg.str());
  }
  return z < 1.0 ? std::log(z) : z - 1.0;
}

double transform_inverse(double y) { return y < 0.0 ? std::exp(y) : y + 1.0; }

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double softplus_inverse(double y) {
  if (!(y > 0.0)) throw DomainError("softplus_inverse: argument must be positive");
  // log(exp(y) - 1) = y + log(1 - exp(-y))
  return y + std::log(-std::expm1(-y));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double mean_of(std::span<const double> x) {
  if (x.empty()) return 0.0;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double pstd_of(std::span<const double> x) {
  if (x.empty()) return 0.0;
  const double m = mean_of(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size()));
}

InputSeries::InputSeries(double t0, double dt, std::vector<std::string> channel_names,
                         std::vector<double> values)
    : t0_(t0), dt_(dt), names_(std::move(channel_names)), values_(std::move(values)) {
  if (!(dt_ > 0.0) || !std::isfinite(dt_)) throw DataError("InputSeries: dt must be positive");
  if (names_.empty()) throw DimensionError("InputSeries: at least one channel required");
  if (values_.size() % names_.size() != 0)
    throw DimensionError("InputSeries: value count is not a multiple of the channel count");
  n_ = values_.size() / names_.size();
  if (n_ < 2) throw DataError("InputSeries: at least two samples required");
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!std::isfinite(values_[k])) {
      std::ostringstream msg;
      msg << "InputSeries: non-finite value at row " << k / names_.size() << ", channel '"
          << names_[k % names_.size()] << "'";
      throw DataError(msg.str(), k / names_.size());
    }
  }
}

InputSeries InputSeries::slice(std::size_t begin, std::size_t end) const {
  if (begin >= end || end > n_) throw DimensionError("InputSeries::slice: bad range");
  const std::size_t d = channels();
  std::vector<double> v(values_.begin() + static_cast<std::ptrdiff_t>(begin * d),
                        values_.begin() + static_cast<std::ptrdiff_t>(end * d));
  return InputSeries(time(begin), dt_, names_, std::move(v));
}

bool PreprocessStats::any_constant_channel() const {
  return std::find(constant_channel.begin(), constant_channel.end(), true) !=
         constant_channel.end();
}

double PreprocessStats::to_model(double raw) const {
  if (!(raw >= 0.0)) {
    std::ostringstream msg;
    msg << "raw target must be non-negative, got " << raw;
    throw DomainError(msg.str());
  }
  double z = raw / target_scale;
  if (z == 0.0) z = zero_floor;
  return transform_forward(z);
}

void PreprocessStats::standardize(std::span<const double> u, std::span<double> out) const {
  if (u.size() != channels() || out.size() != channels())
    throw DimensionError("standardize: channel count mismatch");
  for (std::size_t j = 0; j < u.size(); ++j) out[j] = (u[j] - input_means[j]) / input_stds[j];
}

std::vector<double> PreprocessStats::standardize(std::span<const double> u) const {
  std::vector<double> out(u.size());
  standardize(u, out);
  return out;
}

std::vector<double> PreprocessStats::standardize_all(const InputSeries& inputs) const {
  const std::size_t d = inputs.channels();
  if (d != channels()) throw DimensionError("standardize_all: channel count mismatch");
  std::vector<double> out(inputs.size() * d);
  for (std::size_t i = 0; i < inputs.size(); ++i)
    standardize(inputs.row(i), std::span<double>(out.data() + i * d, d));
  return out;
}

PreprocessStats fit_input_stats(const InputSeries& train_inputs) {
  const std::size_t d = train_inputs.channels();
  const std::size_t n = train_inputs.size();
  PreprocessStats stats;
  stats.input_means.assign(d, 0.0);
  stats.input_stds.assign(d, 1.0);
  stats.constant_channel.assign(d, false);
  std::vector<double> column(n);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < n; ++i) column[i] = train_inputs.row(i)[j];
    stats.input_means[j] = mean_of(column);
    const double s = pstd_of(column);
    if (s > 0.0) {
      stats.input_stds[j] = s;
    } else {
      stats.constant_channel[j] = true;
    }
  }
  return stats;
}

PreprocessStats fit_preprocess(std::span<const double> train_raw_target,
                               const InputSeries& train_inputs) {
  if (train_raw_target.size() < 2) throw DataError("fit_preprocess: need at least 2 samples");
  if (train_raw_target.size() != train_inputs.size())
    throw DimensionError("fit_preprocess: target and input lengths differ");
  PreprocessStats stats = fit_input_stats(train_inputs);
  stats.target_scale = pstd_of(train_raw_target);
  if (!(stats.target_scale > 0.0))
    throw DataError("fit_preprocess: target is constant (zero standard deviation)");
  return stats;
}

ObservationSeries ObservationSeries::from_raw(double t0, double dt, std::vector<double> raw,
                                              const PreprocessStats& stats) {
  ObservationSeries obs;
  obs.t0 = t0;
  obs.dt = dt;
  obs.y.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!std::isfinite(raw[i])) throw DataError("observation: non-finite target", i);
    try {
      obs.y[i] = stats.to_model(raw[i]);
    } catch (const DomainError& e) {
      throw DataError(std::string("observation ") + std::to_string(i) + ": " + e.what(), i);
    }
  }
  obs.y_raw = std::move(raw);
  return obs;
}

std::vector<double> ModelParams::flatten() const {
  std::vector<double> theta;
  theta.reserve(size());
  theta.insert(theta.end(), a.begin(), a.end());
  theta.push_back(b);
  theta.insert(theta.end(), c.begin(), c.end());
  theta.push_back(d_off);
  theta.push_back(lambda_raw);
  return theta;
}

ModelParams ModelParams::unflatten(std::span<const double> theta, std::size_t d) {
  if (theta.size() != 2 * d + 3) throw DimensionError("ModelParams::unflatten: size mismatch");
  ModelParams p(d);
  std::copy_n(theta.begin(), d, p.a.begin());
  p.b = theta[d];
  std::copy_n(theta.begin() + static_cast<std::ptrdiff_t>(d + 1), d, p.c.begin());
  p.d_off = theta[2 * d + 1];
  p.lambda_raw = theta[2 * d + 2];
  return p;
}

}  // namespace oupm
