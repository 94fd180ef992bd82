#include "oupm/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "oupm/format.hpp"
#include "oupm/ou_process.hpp"
#include "oupm/rng.hpp"

namespace oupm {

void TransitionSet::push_back(std::span<const double> u_std, double y_prev, double y_next,
                              double dt) {
  if (u_std.size() != d_) throw DimensionError("TransitionSet: channel count mismatch");
  u_.insert(u_.end(), u_std.begin(), u_std.end());
  y_prev_.push_back(y_prev);
  y_next_.push_back(y_next);
  dt_.push_back(dt);
}

void TransitionSet::append(const TransitionSet& other) {
  if (other.d_ != d_) throw DimensionError("TransitionSet::append: channel count mismatch");
  u_.insert(u_.end(), other.u_.begin(), other.u_.end());
  y_prev_.insert(y_prev_.end(), other.y_prev_.begin(), other.y_prev_.end());
  y_next_.insert(y_next_.end(), other.y_next_.begin(), other.y_next_.end());
  dt_.insert(dt_.end(), other.dt_.begin(), other.dt_.end());
}

TransitionSet TransitionSet::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > size()) throw DimensionError("TransitionSet::slice: bad range");
  TransitionSet out(d_);
  for (std::size_t i = begin; i < end; ++i) {
    const auto e = (*this)[i];
    out.push_back(e.u_std, e.y_prev, e.y_next, e.dt);
  }
  return out;
}

TransitionSet TransitionSet::select(std::span<const std::size_t> indices) const {
  TransitionSet out(d_);
  for (std::size_t i : indices) {
    if (i >= size()) throw DimensionError("TransitionSet::select: index out of range");
    const auto e = (*this)[i];
    out.push_back(e.u_std, e.y_prev, e.y_next, e.dt);
  }
  return out;
}

TransitionSet build_transitions(const InputSeries& inputs, const ObservationSeries& obs,
                                const PreprocessStats& stats) {
  const std::size_t n = inputs.size();
  if (obs.size() != n || obs.y_raw.size() != n) {
    std::ostringstream msg;
    msg << "build_transitions: " << n << " input rows but " << obs.size() << " observations";
    throw DataError(msg.str());
  }
  if (n < 2) throw DataError("build_transitions: need at least 2 samples");
  if (std::abs(obs.dt - inputs.dt()) > 1e-6 * inputs.dt() ||
      std::abs(obs.t0 - inputs.t0()) > 1e-6 * inputs.dt())
    throw DataError("build_transitions: observation and input time grids differ");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(obs.y[i])) {
      std::ostringstream msg;
      msg << "build_transitions: non-finite observation at index " << i;
      throw DataError(msg.str(), i);
    }
  }

  const std::size_t d = inputs.channels();
  TransitionSet out(d);
  std::vector<double> u(d);
  for (std::size_t i = 1; i < n; ++i) {
    stats.standardize(inputs.row(i - 1), u);
    out.push_back(u, obs.y[i - 1], obs.y[i], inputs.dt());
  }
  return out;
}

TrainValidationSplit split_tail(const TransitionSet& all, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw DataError("split_tail: validation fraction must lie in (0, 1)");
  const auto n = all.size();
  auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  n_val = std::clamp<std::size_t>(n_val, 1, n > 1 ? n - 1 : 1);
  if (n < 2) throw DataError("split_tail: need at least 2 examples");
  return {all.slice(0, n - n_val), all.slice(n - n_val, n)};
}

TrainValidationSplit split_by_indices(const TransitionSet& all,
                                      std::span<const std::size_t> validation_indices) {
  std::vector<bool> is_val(all.size(), false);
  for (std::size_t i : validation_indices) {
    if (i >= all.size()) throw DataError("split_by_indices: index out of range", i);
    is_val[i] = true;
  }
  std::vector<std::size_t> train_idx, val_idx;
  for (std::size_t i = 0; i < all.size(); ++i) (is_val[i] ? val_idx : train_idx).push_back(i);
  if (train_idx.empty() || val_idx.empty())
    throw DataError("split_by_indices: both train and validation must be non-empty");
  return {all.select(train_idx), all.select(val_idx)};
}

namespace {

// d/dx of (1 - e^{-x}) / x
double kernel_slope(double x) {
  if (std::abs(x) < 1e-2)
    return -0.5 + x * (1.0 / 3.0 + x * (-1.0 / 8.0 + x * (1.0 / 30.0 + x * (-1.0 / 144.0))));
  return (x * std::exp(-x) + std::expm1(-x)) / (x * x);
}

double dot(std::span<const double> w, std::span<const double> u) {
  double s = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * u[j];
  return s;
}

[[noreturn]] void throw_non_finite(std::size_t index) {
  std::ostringstream msg;
  msg << "nll: non-finite loss term at example " << index;
  throw DataError(msg.str(), index);
}

template <typename Visit>
void for_each_index(const TransitionSet& batch, std::span<const std::size_t> indices,
                    Visit&& visit) {
  if (indices.empty()) {
    for (std::size_t i = 0; i < batch.size(); ++i) visit(i);
  } else {
    for (std::size_t i : indices) visit(i);
  }
}

}  // namespace

double nll_loss(const ModelParams& params, const TransitionSet& batch,
                std::span<const std::size_t> indices) {
  if (batch.empty()) throw DataError("nll_loss: empty batch");
  if (batch.channels() != params.channels())
    throw DimensionError("nll_loss: channel count mismatch");
  const double lambda = params.lambda();
  double total = 0.0;
  for_each_index(batch, indices, [&](std::size_t i) {
    const auto e = batch[i];
    const auto t = transition(e.y_prev, dot(params.a, e.u_std) + params.b,
                              softplus(dot(params.c, e.u_std) + params.d_off), lambda, e.dt);
    const double v = std::max(t.variance, kVarianceFloor);
    const double r = e.y_next - t.mean;
    const double term = std::log(v) + r * r / v;
    if (!std::isfinite(term)) throw_non_finite(i);
    total += term;
  });
  return total;
}

double nll_loss(const ModelParams& params, const TransitionSet& batch) {
  return nll_loss(params, batch, {});
}

double nll_loss_and_gradient(const ModelParams& params, const TransitionSet& batch,
                             std::span<const std::size_t> indices, std::span<double> grad) {
  const std::size_t d = params.channels();
  if (batch.empty()) throw DataError("nll_loss: empty batch");
  if (batch.channels() != d) throw DimensionError("nll_loss: channel count mismatch");
  if (grad.size() != params.size()) throw DimensionError("nll_gradient: gradient size mismatch");
  std::fill(grad.begin(), grad.end(), 0.0);

  const double lambda = params.lambda();
  const double dlambda_draw = sigmoid(params.lambda_raw);
  double g_b = 0.0, g_d = 0.0, g_lambda = 0.0;
  double total = 0.0;

  for_each_index(batch, indices, [&](std::size_t i) {
    const auto e = batch[i];
    const double mu = dot(params.a, e.u_std) + params.b;
    const double pre = dot(params.c, e.u_std) + params.d_off;
    const double sigma = softplus(pre);

    const double decay = std::exp(-lambda * e.dt);
    const double one_minus = -std::expm1(-lambda * e.dt);
    const double mean = e.y_prev * decay + mu * one_minus;
    const double kernel = variance_kernel(lambda, e.dt);
    const double var_raw = sigma * sigma * kernel;
    const bool floored = var_raw < kVarianceFloor;
    const double v = floored ? kVarianceFloor : var_raw;

    const double r = e.y_next - mean;
    const double term = std::log(v) + r * r / v;
    if (!std::isfinite(term)) throw_non_finite(i);
    total += term;

    const double dl_dm = -2.0 * r / v;
    const double dl_dv = floored ? 0.0 : (1.0 / v - r * r / (v * v));

    const double dm_dmu = one_minus;
    const double dm_dlambda = -e.dt * decay * (e.y_prev - mu);
    const double dv_dsigma = 2.0 * sigma * kernel;
    const double dv_dlambda = sigma * sigma * e.dt * kernel_slope(2.0 * lambda * e.dt) * 2.0 * e.dt;

    const double g_mu = dl_dm * dm_dmu;
    const double g_pre = dl_dv * dv_dsigma * sigmoid(pre);
    for (std::size_t j = 0; j < d; ++j) {
      grad[j] += g_mu * e.u_std[j];
      grad[d + 1 + j] += g_pre * e.u_std[j];
    }
    g_b += g_mu;
    g_d += g_pre;
    g_lambda += dl_dm * dm_dlambda + dl_dv * dv_dlambda;
  });

  grad[d] = g_b;
  grad[2 * d + 1] = g_d;
  grad[2 * d + 2] = g_lambda * dlambda_draw;
  return total;
}

std::vector<double> nll_gradient(const ModelParams& params, const TransitionSet& batch) {
  std::vector<double> grad(params.size());
  nll_loss_and_gradient(params, batch, {}, grad);
  return grad;
}

ModelParams initial_params(const TransitionSet& train, std::uint64_t seed,
                           bool constant_volatility) {
  if (train.empty()) throw DataError("initial_params: empty training set");
  const std::size_t d = train.channels();
  ModelParams p(d);
  const CounterRng rng(seed, 0x1a17);
  std::uint64_t k = 0;
  for (std::size_t j = 0; j < d; ++j) p.a[j] = 0.01 * rng.normal(k++);
  for (std::size_t j = 0; j < d; ++j) p.c[j] = constant_volatility ? 0.0 : 0.01 * rng.normal(k++);

  std::vector<double> y(train.size()), scaled_increment(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto e = train[i];
    y[i] = e.y_next;
    scaled_increment[i] = (e.y_next - e.y_prev) / std::sqrt(e.dt);
  }
  p.b = mean_of(y);
  double sigma0 = pstd_of(scaled_increment);
  if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) sigma0 = 1.0;
  p.d_off = softplus_inverse(sigma0);
  p.lambda_raw = softplus_inverse(1.0);
  return p;
}

namespace {

std::string snapshot_text(std::span<const double> theta) {
  std::string s = "[";
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (i) s += ", ";
    append_double(s, theta[i]);
  }
  return s + "]";
}

}  // namespace

FitReport fit(const TransitionSet& train, const TransitionSet& validation,
              const TrainConfig& config, std::optional<ModelParams> init) {
  if (train.empty() || validation.empty())
    throw DataError("fit: train and validation sets must be non-empty");
  if (train.channels() != validation.channels())
    throw DimensionError("fit: train/validation channel mismatch");
  if (config.epochs < 1) throw DataError("fit: epochs must be >= 1");
  if (config.batch_size < 1) throw DataError("fit: batch_size must be >= 1");
  if (!(config.learning_rate > 0.0)) throw DataError("fit: learning_rate must be positive");

  const auto start = std::chrono::steady_clock::now();
  const std::size_t d = train.channels();
  ModelParams params =
      init ? *init : initial_params(train, config.seed, config.constant_volatility);
  if (params.channels() != d) throw DimensionError("fit: initial parameters have wrong size");
  if (config.constant_volatility) std::fill(params.c.begin(), params.c.end(), 0.0);

  std::vector<double> theta = params.flatten();
  const std::size_t n_params = theta.size();
  std::vector<double> m1(n_params, 0.0), m2(n_params, 0.0), grad(n_params);
  std::uint64_t step = 0;

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t n_batches = (train.size() + config.batch_size - 1) / config.batch_size;

  FitReport report;
  report.best_params = params;
  double best_val = std::numeric_limits<double>::infinity();
  const auto& adam = config.adam;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    // Fisher-Yates on a per-epoch stream
    const CounterRng rng(config.seed, 0x5eed0000ULL + epoch);
    std::uint64_t counter = 0;
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.below(i, counter)]);

    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < n_batches; ++b) {
      const std::size_t lo = b * config.batch_size;
      const std::size_t hi = std::min(lo + config.batch_size, order.size());
      const std::span<const std::size_t> batch(order.data() + lo, hi - lo);

      double loss = 0.0;
      try {
        loss = nll_loss_and_gradient(params, train, batch, grad);
      } catch (const DataError& e) {
        throw DivergenceError(std::string("fit diverged at epoch ") + std::to_string(epoch) +
                                  ", batch " + std::to_string(b) + ": " + e.what() +
                                  "; parameters " + snapshot_text(theta),
                              epoch, b, theta);
      }
      if (config.constant_volatility)
        std::fill(grad.begin() + static_cast<std::ptrdiff_t>(d + 1),
                  grad.begin() + static_cast<std::ptrdiff_t>(2 * d + 1), 0.0);
      epoch_loss += loss;

      ++step;
      const double corr1 = 1.0 - std::pow(adam.beta1, static_cast<double>(step));
      const double corr2 = 1.0 - std::pow(adam.beta2, static_cast<double>(step));
      for (std::size_t k = 0; k < n_params; ++k) {
        m1[k] = adam.beta1 * m1[k] + (1.0 - adam.beta1) * grad[k];
        m2[k] = adam.beta2 * m2[k] + (1.0 - adam.beta2) * grad[k] * grad[k];
        theta[k] -= config.learning_rate * (m1[k] / corr1) / (std::sqrt(m2[k] / corr2) + adam.epsilon);
      }
      bool finite = true;
      for (double v : theta) finite = finite && std::isfinite(v);
      if (!finite)
        throw DivergenceError("fit diverged at epoch " + std::to_string(epoch) + ", batch " +
                                  std::to_string(b) + ": non-finite parameters " +
                                  snapshot_text(theta),
                              epoch, b, theta);
      params = ModelParams::unflatten(theta, d);
    }

    double val = 0.0;
    try {
      val = nll_loss(params, validation) / static_cast<double>(validation.size());
    } catch (const DataError& e) {
      throw DivergenceError("fit diverged at epoch " + std::to_string(epoch) +
                                " (validation): " + e.what() + "; parameters " +
                                snapshot_text(theta),
                            epoch, n_batches, theta);
    }
    report.train_loss_curve.push_back(epoch_loss / static_cast<double>(train.size()));
    report.val_loss_curve.push_back(val);
    if (!config.early_stopping) {
      report.best_params = params;
      report.best_epoch = epoch;
    } else if (val < best_val) {
      best_val = val;
      report.best_params = params;
      report.best_epoch = epoch;
    }
  }

  report.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::string fit_report_csv(const FitReport& report) {
  std::string out = "epoch,train_loss,val_loss\n";
  for (std::size_t e = 0; e < report.train_loss_curve.size(); ++e) {
    out += std::to_string(e);
    out += ',';
    append_double(out, report.train_loss_curve[e]);
    out += ',';
    append_double(out, report.val_loss_curve[e]);
    out += '\n';
  }
  return out;
}

}  // namespace oupm
