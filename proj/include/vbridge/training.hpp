// vbridge - variational bridge models for time-coarsened stochastic dynamics
// Copyright 2026 The vbridge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vbridge/bridge.hpp"
#include "vbridge/encoder.hpp"
#include "vbridge/nn.hpp"

#include <functional>
#include <span>
#include <vector>

namespace vbridge {

struct TrainingConfig {
  std::size_t batch_size = 128;
  std::size_t epochs = 20;
  /// Optimizer steps per epoch; 0 means one pass over the training split.
  std::size_t steps_per_epoch = 0;
  double lr_pretrain = 1e-4;
  double lr_finetune = 5e-5;
  std::size_t warmup_steps = 1000;
  double plateau_factor = 0.8;
  std::size_t plateau_patience = 5;
  double min_lr = 1e-7;
  double validation_fraction = 0.1;

  void validate() const;
  bool operator==(const TrainingConfig&) const = default;
};

/// One raw training pair before perturbation and encoding: (x, x) when
/// pretraining on single structures, (x_t, x_{t+tau}) when finetuning.
struct RawCoupling {
  State x;
  State y1;
};

struct JointLoss {
  double total = 0.0;
  double kl = 0.0;
  double abm = 0.0;
  GradBundle grad_e;
  GradBundle grad_d;
};

/// w_kl * KL + w_abm * ABM on a batch, with gradients for both networks.
/// The bridge loss reaches the encoder through the reparameterized latent.
JointLoss joint_loss(const Net& net_e, const Net& net_d, std::span<const RawCoupling> batch, const EncoderConfig& enc,
                     const BridgeConfig& bridge, Seed seed, bool want_grads = true);

/// Linear warmup from 0 to the base rate, then reduce-on-plateau keyed to
/// the validation loss reported once per epoch.
class LrSchedule {
 public:
  LrSchedule(double base_lr, const TrainingConfig& cfg);

  /// Learning rate for the optimizer step about to be taken (1-based count).
  double rate_for_step(std::size_t step) const;
  void report_validation(double loss);
  double current_plateau_rate() const { return plateau_lr_; }

 private:
  double base_lr_;
  std::size_t warmup_;
  double factor_;
  std::size_t patience_;
  double min_lr_;
  double plateau_lr_;
  double best_ = 0.0;
  bool has_best_ = false;
  std::size_t bad_epochs_ = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_abm = 0.0;
  double lr = 0.0;
};

struct TrainState {
  Net net_e;
  Net net_d;
  std::vector<EpochRecord> history;
  Net best_e;
  Net best_d;
  double best_val = 0.0;
};

using EpochCallback = std::function<void(const TrainState&)>;

/// Deterministic validation split: the last `fraction` of a seeded shuffle.
void split_validation(const std::vector<RawCoupling>& data, double fraction, Seed seed,
                      std::vector<RawCoupling>& train, std::vector<RawCoupling>& val);

/// Validation loss with noise frozen by `seed`, so values compare across epochs and runs.
JointLoss validation_loss(const Net& net_e, const Net& net_d, std::span<const RawCoupling> val,
                          const EncoderConfig& enc, const BridgeConfig& bridge, Seed seed);

/// Trains both networks jointly with Adam. `on_epoch` runs after every epoch.
TrainState train_joint(Net net_e, Net net_d, const std::vector<RawCoupling>& data, const EncoderConfig& enc,
                       const BridgeConfig& bridge, const TrainingConfig& cfg, double lr, Seed seed,
                       const EpochCallback& on_epoch = {});

}  // namespace vbridge
