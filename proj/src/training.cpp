// vbridge - variational bridge models for time-coarsened stochastic dynamics
// Copyright 2026 The vbridge Authors
// SPDX-License-Identifier: Apache-2.0

#include "vbridge/training.hpp"

#include "vbridge/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vbridge {

void TrainingConfig::validate() const {
  if (batch_size == 0) throw ConfigError("training.batch_size must be >= 1");
  if (epochs == 0) throw ConfigError("training.epochs must be >= 1");
  if (!(lr_pretrain > 0.0)) throw ConfigError("training.lr_pretrain must be > 0");
  if (!(lr_finetune > 0.0)) throw ConfigError("training.lr_finetune must be > 0");
  if (!(plateau_factor > 0.0 && plateau_factor <= 1.0)) throw ConfigError("training.plateau_factor must lie in (0, 1]");
  if (!(min_lr >= 0.0)) throw ConfigError("training.min_lr must be >= 0");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("training.validation_fraction must lie in (0, 1)");
  }
}

JointLoss joint_loss(const Net& net_e, const Net& net_d, std::span<const RawCoupling> batch, const EncoderConfig& enc,
                     const BridgeConfig& bridge, Seed seed, bool want_grads) {
  if (batch.empty()) throw DomainError("training batch is empty");
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  std::vector<CouplingSample> samples;
  std::vector<EncoderOut> encoded;
  samples.reserve(batch.size());
  encoded.reserve(batch.size());
  JointLoss out;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    CouplingSample s;
    s.x0_raw = batch[i].x;
    s.x0 = perturb(batch[i].x, enc.sigma_p, derive_seed(seed, 2 * i));
    EncoderOut e = encode(net_e, s.x0, derive_seed(seed, 2 * i + 1));
    s.y0 = e.y0;
    s.y1 = batch[i].y1;
    s.log_var = e.log_var;
    out.kl += kl_loss(e.log_var, enc.sigma_e).value * inv_b;
    samples.push_back(std::move(s));
    encoded.push_back(std::move(e));
  }
  const auto draws = draw_abm_noise(batch.size(), batch.front().y1.size(), bridge, derive_seed(seed, ~0ULL));
  AbmBatchLoss abm = abm_batch_loss(net_d, samples, draws, bridge.sigma, bridge.t_clamp, want_grads);
  out.abm = abm.loss;
  out.total = bridge.w_kl * out.kl + bridge.w_abm * out.abm;
  if (!std::isfinite(out.total)) throw NumericalError("non-finite training loss");
  if (!want_grads) return out;

  out.grad_d = std::move(abm.grads);
  out.grad_d *= bridge.w_abm;
  out.grad_e = GradBundle::zeros_like(net_e);
  const Eigen::Index d = batch.front().x.size();
  const auto b = static_cast<Eigen::Index>(samples.size());
  Matrix inputs(d, b);
  Matrix cot(d, b);
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto k = static_cast<std::size_t>(i);
    inputs.col(i) = samples[k].x0;
    cot.col(i) = bridge.w_kl * inv_b * kl_loss(encoded[k].log_var, enc.sigma_e).grad +
                 bridge.w_abm * abm.y0_cotangents[k].cwiseProduct(reparam_log_var_jacobian(encoded[k]));
  }
  BatchTape tape;
  forward_batch(net_e, inputs, tape);
  backward_batch(net_e, inputs, tape, cot, false, out.grad_e);
  return out;
}

LrSchedule::LrSchedule(double base_lr, const TrainingConfig& cfg)
    : base_lr_(base_lr),
      warmup_(cfg.warmup_steps),
      factor_(cfg.plateau_factor),
      patience_(cfg.plateau_patience),
      min_lr_(cfg.min_lr),
      plateau_lr_(base_lr) {}

double LrSchedule::rate_for_step(std::size_t step) const {
  if (warmup_ > 0 && step <= warmup_) {
    return plateau_lr_ * static_cast<double>(step) / static_cast<double>(warmup_);
  }
  return plateau_lr_;
}

void LrSchedule::report_validation(double loss) {
  if (!has_best_ || loss < best_) {
    best_ = loss;
    has_best_ = true;
    bad_epochs_ = 0;
    return;
  }
  if (++bad_epochs_ > patience_) {
    plateau_lr_ = std::max(min_lr_, plateau_lr_ * factor_);
    bad_epochs_ = 0;
  }
}

void split_validation(const std::vector<RawCoupling>& data, double fraction, Seed seed,
                      std::vector<RawCoupling>& train, std::vector<RawCoupling>& val) {
  if (data.size() < 2) throw DataError("need at least two training samples to hold out validation data");
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng.engine());
  auto n_val = static_cast<std::size_t>(std::round(fraction * static_cast<double>(data.size())));
  n_val = std::clamp<std::size_t>(n_val, 1, data.size() - 1);
  train.clear();
  val.clear();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    (i < idx.size() - n_val ? train : val).push_back(data[idx[i]]);
  }
}

JointLoss validation_loss(const Net& net_e, const Net& net_d, std::span<const RawCoupling> val,
                          const EncoderConfig& enc, const BridgeConfig& bridge, Seed seed) {
  return joint_loss(net_e, net_d, val, enc, bridge, seed, false);
}

TrainState train_joint(Net net_e, Net net_d, const std::vector<RawCoupling>& data, const EncoderConfig& enc,
                       const BridgeConfig& bridge, const TrainingConfig& cfg, double lr, Seed seed,
                       const EpochCallback& on_epoch) {
  cfg.validate();
  std::vector<RawCoupling> train, val;
  split_validation(data, cfg.validation_fraction, derive_seed(seed, 100), train, val);
  const Seed val_seed = derive_seed(seed, 101);

  OptState opt_e = OptState::for_net(net_e, lr);
  OptState opt_d = OptState::for_net(net_d, lr);
  LrSchedule schedule(lr, cfg);

  const std::size_t batch = std::min(cfg.batch_size, train.size());
  const std::size_t steps_per_epoch =
      cfg.steps_per_epoch > 0 ? cfg.steps_per_epoch : std::max<std::size_t>(1, train.size() / batch);

  TrainState state{net_e, net_d, {}, net_e, net_d, 0.0};
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = order.size();
  std::size_t step = 0;
  Rng shuffle_rng(derive_seed(seed, 102));
  std::vector<RawCoupling> mb(batch);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double train_sum = 0.0;
    double lr_now = 0.0;
    for (std::size_t s = 0; s < steps_per_epoch; ++s) {
      for (std::size_t b = 0; b < batch; ++b) {
        if (cursor == order.size()) {
          std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
          cursor = 0;
        }
        mb[b] = train[order[cursor++]];
      }
      ++step;
      JointLoss jl = joint_loss(state.net_e, state.net_d, mb, enc, bridge, derive_seed(seed, 1000 + step), true);
      lr_now = schedule.rate_for_step(step);
      opt_e.lr = lr_now;
      opt_d.lr = lr_now;
      opt_step(opt_e, state.net_e, jl.grad_e);
      opt_step(opt_d, state.net_d, jl.grad_d);
      train_sum += jl.total;
    }
    const JointLoss vl = validation_loss(state.net_e, state.net_d, val, enc, bridge, val_seed);
    if (step > cfg.warmup_steps) schedule.report_validation(vl.total);
    state.history.push_back({epoch, train_sum / static_cast<double>(steps_per_epoch), vl.total, vl.abm, lr_now});
    if (state.history.size() == 1 || vl.total < state.best_val) {
      state.best_val = vl.total;
      state.best_e = state.net_e;
      state.best_d = state.net_d;
    }
    if (on_epoch) on_epoch(state);
  }
  return state;
}

}  // namespace vbridge
