#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "ostk/mlp.hpp"

namespace ostk {

struct TrainConfig {
  int epochs = 500;
  double step_size = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch = 16;  // windows per step
  std::uint64_t seed = 0;
  int early_stop_patience = 50;  // epochs without validation improvement

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct LossHistory {
  std::vector<double> train;       // mean batch loss per epoch
  std::vector<double> validation;  // entry 0 is the untrained model
  int best_epoch = 0;              // index into `validation`
  double best_validation = 0.0;
  int skipped_windows = 0;
  int total_windows = 0;

  bool operator==(const LossHistory&) const = default;
};

/// Loss over the given sample indices. Adds the parameter gradient of the
/// returned loss into `grad` when it is non-null.
using BatchLoss = std::function<double(std::span<const std::size_t>, MlpGradient*)>;

/// Called after every epoch with (epoch, mean train loss, validation loss).
using EpochCallback = std::function<void(int, double, double)>;

/// Minibatch Adam with a seeded shuffle per epoch. Keeps the parameters with
/// the lowest validation loss (including the starting point) and stops after
/// `early_stop_patience` epochs without improvement.
LossHistory fit_network(Mlp& net, std::size_t train_count, const BatchLoss& train_loss,
                        const std::function<double()>& validation_loss, const TrainConfig& cfg,
                        std::string_view stream, const EpochCallback& on_epoch = {});

}  // namespace ostk
