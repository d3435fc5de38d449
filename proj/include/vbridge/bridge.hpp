// vbridge - variational bridge models for time-coarsened stochastic dynamics
// Copyright 2026 The vbridge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vbridge/encoder.hpp"
#include "vbridge/errors.hpp"
#include "vbridge/nn.hpp"
#include "vbridge/types.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace vbridge {

struct BridgeConfig {
  /// Diffusion scale of the bridge / generative SDE.
  double sigma = 0.2;
  /// Euler-Maruyama steps over diffusion time [0, 1].
  std::size_t steps = 10;
  /// Training times are drawn from U(t_clamp, 1 - t_clamp).
  double t_clamp = 1e-3;
  double w_kl = 0.8;
  double w_abm = 1.0;
  /// When set, generate_step draws its step count uniformly from [8, 10].
  bool t_steps_jitter = false;

  void validate() const;
  bool operator==(const BridgeConfig&) const = default;
};

/// One training coupling: raw input, perturbed input, latent sample and target.
struct CouplingSample {
  State x0_raw;
  State x0;
  State y0;
  State y1;
  Vector log_var;
};

/// Discretized realization of the generative SDE on the grid {0, 1/T, ..., 1}.
struct DiffusionPath {
  std::vector<double> grid;
  std::vector<State> states;
  State y0;

  std::size_t steps() const { return grid.size() - 1; }
  double dt() const { return 1.0 / static_cast<double>(steps()); }
};

/// A drift b(t, y0, yt) together with its vector-Jacobian product in yt.
/// Nets are adapted through NetDrift; analytic fields used by tests and
/// oracles implement this directly.
class DriftField {
 public:
  virtual ~DriftField() = default;
  virtual Vector eval(double t, const State& y0, const State& yt) const = 0;
  /// cotangent^T d b / d yt.
  virtual Vector vjp_state(double t, const State& y0, const State& yt, const Vector& cotangent) const = 0;
};

/// Decoder input layout: [t, y0..., yt...].
Vector decoder_input(double t, const State& y0, const State& yt);

class NetDrift final : public DriftField {
 public:
  /// Throws ShapeError unless net maps 1 + 2D -> D for some D.
  explicit NetDrift(const Net& net);

  Vector eval(double t, const State& y0, const State& yt) const override;
  Vector vjp_state(double t, const State& y0, const State& yt, const Vector& cotangent) const override;

  const Net& net() const { return net_; }

 private:
  const Net& net_;
};

/// t*y1 + (1-t)*y0 + sigma*sqrt(t(1-t))*eps. Throws DomainError unless 0 < t < 1.
State sample_bridge_point(const State& y0, const State& y1, double t, double sigma, Seed seed);

/// (y1 - yt) / (1 - t). Throws DomainError when t > 1 - t_clamp.
Vector abm_target(const State& y1, const State& yt, double t, double t_clamp = 1e-3);

/// Frozen randomness for one ABM sample: diffusion time and bridge noise.
struct AbmDraw {
  double t = 0.5;
  Vector eps;
};

std::vector<AbmDraw> draw_abm_noise(std::size_t batch_size, Eigen::Index dim, const BridgeConfig& cfg, Seed seed);

struct AbmBatchLoss {
  double loss = 0.0;
  GradBundle grads;
  /// d loss / d y0 per sample; filled when requested. Used to push the
  /// bridge loss through the encoder's reparameterization.
  std::vector<Vector> y0_cotangents;
};

/// Mean squared error between net_d(t, y0, yt) and the ABM target, averaged
/// over batch and coordinates, with exact gradients. Deterministic given draws.
AbmBatchLoss abm_batch_loss(const Net& net_d, std::span<const CouplingSample> batch, std::span<const AbmDraw> draws,
                            double sigma, double t_clamp, bool want_y0_cotangents = false);

struct AbmStep {
  double loss = 0.0;
  GradBundle grads;
};

/// Draws t and bridge noise for each sample from `seed`, then evaluates abm_batch_loss.
AbmStep abm_training_step(const Net& net_d, std::span<const CouplingSample> batch, const BridgeConfig& cfg, Seed seed);

/// Euler-Maruyama: Y_{k+1} = Y_k + b(t_k, y0, Y_k) dt + sigma sqrt(dt) eps_k.
/// Throws NumericalError with the step index on a non-finite state.
DiffusionPath simulate_sde(const DriftField& drift, const State& y0, double sigma, std::size_t steps, Seed seed);

inline DiffusionPath simulate_sde(const Net& net_d, const State& y0, const BridgeConfig& cfg, Seed seed) {
  return simulate_sde(NetDrift(net_d), y0, cfg.sigma, cfg.steps, seed);
}

/// One draw from the composed kernel x_t -> y0 -> y1.
State generate_step(const Net& net_e, const Net& net_d, const State& x_t, const BridgeConfig& cfg, Seed seed);

/// Thrown by rollout: keeps every state produced before the failure.
class RolloutError : public NumericalError {
 public:
  RolloutError(const std::string& what, std::size_t step, Trajectory partial)
      : NumericalError(what, step), partial_(std::move(partial)) {}
  const Trajectory& partial() const noexcept { return partial_; }

 private:
  Trajectory partial_;
};

/// Iterates generate_step n_steps times; returns n_steps + 1 states including x0.
Trajectory rollout(const Net& net_e, const Net& net_d, const State& x0, std::size_t n_steps, const BridgeConfig& cfg,
                   Seed seed);

}  // namespace vbridge
