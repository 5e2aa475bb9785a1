#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "solace/errors.hpp"
#include "solace/nn/adam.hpp"
#include "solace/nn/checkpoint.hpp"
#include "solace/nn/params.hpp"

namespace solace::nn {

struct TrainSchedule {
  double initial_lr = 0.001;
  double min_lr = 1e-5;
  double plateau_factor = 0.1;
  int early_stop_patience = 3;
  int max_epochs = 20;
  std::uint64_t rng_seed = 42;
  std::size_t batch_size = 32;
  double clip_norm = 5.0;  // <= 0 disables clipping
  AdamConfig adam{};

  void validate() const {
    if (!(min_lr > 0 && min_lr <= initial_lr)) throw ConfigurationError("schedule: need 0 < min_lr <= initial_lr");
    if (!(plateau_factor > 0 && plateau_factor < 1)) throw ConfigurationError("schedule: plateau_factor must be in (0,1)");
    if (early_stop_patience < 1) throw ConfigurationError("schedule: patience must be >= 1");
    if (max_epochs < 1) throw ConfigurationError("schedule: max_epochs must be >= 1");
    if (batch_size < 1) throw ConfigurationError("schedule: batch_size must be >= 1");
  }
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = std::numeric_limits<double>::quiet_NaN();  // NaN without a validation set
  double lr = 0.0;  // rate in effect after this epoch's plateau check
  std::string checkpoint_path;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  bool stopped_early = false;
};

/// Early stopping plus multiply-per-stagnant-epoch learning-rate decay,
/// both driven by validation loss.
class PlateauTracker {
 public:
  struct Decision {
    bool improved = false;
    bool stop = false;
    double lr = 0.0;
  };

  explicit PlateauTracker(const TrainSchedule& s) : schedule_(s), lr_(s.initial_lr) {}

  Decision observe(double val_loss) {
    Decision d;
    if (val_loss < best_) {
      best_ = val_loss;
      stale_ = 0;
      d.improved = true;
    } else {
      ++stale_;
      lr_ = std::max(lr_ * schedule_.plateau_factor, schedule_.min_lr);
      d.stop = stale_ >= schedule_.early_stop_patience;
    }
    d.lr = lr_;
    return d;
  }

  double lr() const { return lr_; }

 private:
  TrainSchedule schedule_;
  double lr_;
  double best_ = std::numeric_limits<double>::infinity();
  int stale_ = 0;
};

/// What `fit` needs from a model: a parameter bundle type, an example type,
/// the mean batch loss and its gradient, and the mean loss alone.
template <class Pr>
concept TrainingProblem = requires(const Pr& pr, const typename Pr::Params& params,
                                   std::span<const typename Pr::Example* const> batch, typename Pr::Params& grad) {
  requires ParamBundle<typename Pr::Params>;
  { pr.loss_and_gradient(params, batch, grad) } -> std::convertible_to<double>;
  { pr.loss(params, batch) } -> std::convertible_to<double>;
};

template <ParamBundle P>
struct FitOptions {
  /// When set, `epoch-NNN.json` is written here after every epoch.
  std::filesystem::path checkpoint_dir;
  std::function<nlohmann::json(const P&)> checkpoint_writer;
  std::function<void(const EpochRecord&)> on_epoch;
};

template <ParamBundle P>
struct FitResult {
  P params;  // best-validation-loss weights (last epoch without validation)
  TrainHistory history;
};

/// Mini-batch Adam with global-norm clipping. Deterministic for a fixed
/// `rng_seed`: batches are drawn from a seeded shuffle each epoch.
template <TrainingProblem Pr>
FitResult<typename Pr::Params> fit(const Pr& problem, typename Pr::Params params,
                                   std::span<const typename Pr::Example> train,
                                   std::span<const typename Pr::Example> val, const TrainSchedule& schedule,
                                   const FitOptions<typename Pr::Params>& options = {}) {
  using Params = typename Pr::Params;
  using Example = typename Pr::Example;
  schedule.validate();
  if (train.empty()) throw InvalidInput("fit: empty training set");

  std::vector<const Example*> order(train.size());
  for (std::size_t k = 0; k < train.size(); ++k) order[k] = &train[k];
  std::vector<const Example*> val_ptrs(val.size());
  for (std::size_t k = 0; k < val.size(); ++k) val_ptrs[k] = &val[k];

  Rng rng(schedule.rng_seed);
  AdamState<Params> adam(params);
  PlateauTracker plateau(schedule);
  Params grad = zeros_like(params);

  FitResult<Params> result{params, {}};
  double lr = schedule.initial_lr;
  for (int epoch = 1; epoch <= schedule.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += schedule.batch_size) {
      const std::size_t end = std::min(order.size(), start + schedule.batch_size);
      const std::span<const Example* const> batch(order.data() + start, end - start);
      grad.visit([](std::string_view, auto& t) { t.setZero(); });
      const double loss = problem.loss_and_gradient(params, batch, grad);
      if (!std::isfinite(loss)) throw NumericOverflow("loss", "non-finite batch loss at epoch " + std::to_string(epoch));
      std::string bad;
      if (!all_finite(grad, &bad)) throw NumericOverflow(bad, "non-finite gradient at epoch " + std::to_string(epoch));
      clip_global_norm(grad, schedule.clip_norm);
      adam_step(params, grad, adam, lr, schedule.adam);
      loss_sum += loss * static_cast<double>(batch.size());
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    bool stop = false;
    if (!val_ptrs.empty()) {
      rec.val_loss = problem.loss(params, std::span<const Example* const>(val_ptrs));
      const auto d = plateau.observe(rec.val_loss);
      if (d.improved) {
        result.params = params;
        result.history.best_epoch = epoch;
      }
      lr = d.lr;
      stop = d.stop;
    } else {
      result.params = params;
      result.history.best_epoch = epoch;
    }
    rec.lr = lr;

    if (!options.checkpoint_dir.empty()) {
      char name[32];
      std::snprintf(name, sizeof name, "epoch-%03d.json", epoch);
      const auto path = options.checkpoint_dir / name;
      write_json_file(path, options.checkpoint_writer ? options.checkpoint_writer(params)
                                                      : nlohmann::json{{"tensors", tensors_to_json(params)}});
      rec.checkpoint_path = path.string();
    }
    result.history.epochs.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);
    if (stop) {
      result.history.stopped_early = true;
      break;
    }
  }
  return result;
}

}  // namespace solace::nn
