#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oupm/core.hpp"
#include "oupm/error.hpp"

namespace oupm {

/// One likelihood factor p(y_next | y_prev): the input held over the step,
/// the measured endpoints, and the step length.
struct TransitionExample {
  std::span<const double> u_std;
  double y_prev = 0.0;
  double y_next = 0.0;
  double dt = 0.0;
};

/// Column-oriented storage for a list of TransitionExample.
class TransitionSet {
 public:
  explicit TransitionSet(std::size_t channels = 0) : d_(channels) {}

  std::size_t channels() const { return d_; }
  std::size_t size() const { return y_prev_.size(); }
  bool empty() const { return y_prev_.empty(); }

  void push_back(std::span<const double> u_std, double y_prev, double y_next, double dt);
  void append(const TransitionSet& other);

  TransitionExample operator[](std::size_t i) const {
    return {{u_.data() + i * d_, d_}, y_prev_[i], y_next_[i], dt_[i]};
  }

  /// Examples [begin, end) as a new set.
  TransitionSet slice(std::size_t begin, std::size_t end) const;
  TransitionSet select(std::span<const std::size_t> indices) const;

 private:
  std::size_t d_;
  std::vector<double> u_;
  std::vector<double> y_prev_;
  std::vector<double> y_next_;
  std::vector<double> dt_;
};

/// Pairs consecutive samples (i-1, i), holding the input of sample i-1 over the
/// step and conditioning on the measured previous value. N samples give N-1
/// examples.
TransitionSet build_transitions(const InputSeries& inputs, const ObservationSeries& obs,
                                const PreprocessStats& stats);

/// Contiguous holdout: the last `fraction` of the examples become validation.
struct TrainValidationSplit {
  TransitionSet train;
  TransitionSet validation;
};
TrainValidationSplit split_tail(const TransitionSet& all, double fraction);
TrainValidationSplit split_by_indices(const TransitionSet& all,
                                      std::span<const std::size_t> validation_indices);

/// Negative log-likelihood with constants dropped:
///   sum_i log V_i + (y_next_i - m_i)^2 / V_i
/// Throws DataError carrying the example index if any term is non-finite.
double nll_loss(const ModelParams& params, const TransitionSet& batch);
double nll_loss(const ModelParams& params, const TransitionSet& batch,
                std::span<const std::size_t> indices);

/// Analytic gradient of nll_loss in ModelParams::flatten() order.
std::vector<double> nll_gradient(const ModelParams& params, const TransitionSet& batch);

/// Loss and gradient in one pass over `indices` (all examples when empty).
double nll_loss_and_gradient(const ModelParams& params, const TransitionSet& batch,
                             std::span<const std::size_t> indices, std::span<double> grad);

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  std::size_t epochs = 1000;
  std::size_t batch_size = 512;
  double learning_rate = 1e-2;
  std::uint64_t seed = 0;
  double validation_fraction = 0.15;
  bool early_stopping = true;
  /// Freeze the volatility weights c at zero (sigma depends on d_off only).
  bool constant_volatility = false;
  AdamSettings adam;
};

struct FitReport {
  ModelParams best_params;
  /// Mean per-example loss of the minibatches seen during each epoch.
  std::vector<double> train_loss_curve;
  /// Mean per-example validation loss after each epoch.
  std::vector<double> val_loss_curve;
  std::size_t best_epoch = 0;
  double wall_time = 0.0;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t epoch, std::size_t batch,
                  std::vector<double> snapshot)
      : Error(what), epoch_(epoch), batch_(batch), snapshot_(std::move(snapshot)) {}

  std::size_t epoch() const { return epoch_; }
  std::size_t batch() const { return batch_; }
  const std::vector<double>& snapshot() const { return snapshot_; }

 private:
  std::size_t epoch_;
  std::size_t batch_;
  std::vector<double> snapshot_;
};

/// Starting point near a plausible stationary fit: small random weights,
/// b at the mean target, sigma from the increment scale, lambda = 1.
ModelParams initial_params(const TransitionSet& train, std::uint64_t seed,
                           bool constant_volatility = false);

/// Shuffled-minibatch Adam on nll_loss. With early stopping the parameters of
/// the epoch with the lowest validation loss are returned; otherwise the final
/// ones. Deterministic for a given config.seed.
FitReport fit(const TransitionSet& train, const TransitionSet& validation,
              const TrainConfig& config, std::optional<ModelParams> init = std::nullopt);

/// Loss curves as CSV: epoch,train_loss,val_loss
std::string fit_report_csv(const FitReport& report);

}  // namespace oupm
