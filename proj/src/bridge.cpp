// vbridge - variational bridge models for time-coarsened stochastic dynamics
// Copyright 2026 The vbridge Authors
// SPDX-License-Identifier: Apache-2.0

#include "vbridge/bridge.hpp"

#include <cmath>

namespace vbridge {

void BridgeConfig::validate() const {
  if (!(sigma > 0.0)) throw ConfigError("bridge.sigma must be > 0");
  if (steps < 2) throw ConfigError("bridge.steps must be >= 2");
  if (!(t_clamp > 0.0 && t_clamp < 0.5)) throw ConfigError("bridge.t_clamp must lie in (0, 0.5)");
  if (!(w_kl >= 0.0)) throw ConfigError("bridge.w_kl must be >= 0");
  if (!(w_abm >= 0.0)) throw ConfigError("bridge.w_abm must be >= 0");
}

Vector decoder_input(double t, const State& y0, const State& yt) {
  const Eigen::Index d = y0.size();
  Vector in(1 + 2 * d);
  in[0] = t;
  in.segment(1, d) = y0;
  in.segment(1 + d, d) = yt;
  return in;
}

NetDrift::NetDrift(const Net& net) : net_(net) {
  const auto& s = net.spec();
  if (s.input_dim != 1 + 2 * s.output_dim) {
    throw ShapeError("drift net must map 1 + 2D -> D inputs, got " + std::to_string(s.input_dim) + " -> " +
                     std::to_string(s.output_dim));
  }
}

Vector NetDrift::eval(double t, const State& y0, const State& yt) const {
  return forward(net_, decoder_input(t, y0, yt));
}

Vector NetDrift::vjp_state(double t, const State& y0, const State& yt, const Vector& cotangent) const {
  const GradBundle g = grad(net_, decoder_input(t, y0, yt), cotangent, true);
  return g.input_grad->tail(yt.size());
}

State sample_bridge_point(const State& y0, const State& y1, double t, double sigma, Seed seed) {
  if (!(t > 0.0 && t < 1.0)) throw DomainError("bridge time must lie in (0, 1), got " + std::to_string(t));
  if (y0.size() != y1.size()) throw ShapeError("bridge endpoints differ in dimension");
  Rng rng(seed);
  const Vector eps = rng.normal_vector(y0.size());
  return t * y1 + (1.0 - t) * y0 + sigma * std::sqrt(t * (1.0 - t)) * eps;
}

Vector abm_target(const State& y1, const State& yt, double t, double t_clamp) {
  if (t > 1.0 - t_clamp) throw DomainError("ABM target undefined near t = 1 (t = " + std::to_string(t) + ")");
  if (y1.size() != yt.size()) throw ShapeError("ABM target states differ in dimension");
  return (y1 - yt) / (1.0 - t);
}

std::vector<AbmDraw> draw_abm_noise(std::size_t batch_size, Eigen::Index dim, const BridgeConfig& cfg, Seed seed) {
  Rng rng(seed);
  std::vector<AbmDraw> draws(batch_size);
  for (auto& d : draws) {
    d.t = rng.uniform(cfg.t_clamp, 1.0 - cfg.t_clamp);
    d.eps = rng.normal_vector(dim);
  }
  return draws;
}

AbmBatchLoss abm_batch_loss(const Net& net_d, std::span<const CouplingSample> batch, std::span<const AbmDraw> draws,
                            double sigma, double t_clamp, bool want_y0_cotangents) {
  if (batch.empty()) throw DomainError("ABM batch is empty");
  if (draws.size() != batch.size()) throw ShapeError("ABM draws and batch differ in size");
  const NetDrift drift(net_d);
  const Eigen::Index d = batch.front().y0.size();
  if (static_cast<std::size_t>(d) != net_d.spec().output_dim) throw ShapeError("ABM samples do not match the drift net");
  const auto b = static_cast<Eigen::Index>(batch.size());
  const double scale = 1.0 / (static_cast<double>(b) * static_cast<double>(d));

  Matrix inputs(1 + 2 * d, b);
  Matrix targets(d, b);
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto& s = batch[static_cast<std::size_t>(i)];
    const auto& draw = draws[static_cast<std::size_t>(i)];
    if (s.y0.size() != d || s.y1.size() != d || draw.eps.size() != d) {
      throw ShapeError("ABM sample " + std::to_string(i) + " has inconsistent dimension");
    }
    const double t = draw.t;
    const State yt = t * s.y1 + (1.0 - t) * s.y0 + sigma * std::sqrt(t * (1.0 - t)) * draw.eps;
    targets.col(i) = abm_target(s.y1, yt, t, t_clamp);
    inputs.col(i) = decoder_input(t, s.y0, yt);
  }
  BatchTape tape;
  const Matrix residual = forward_batch(net_d, inputs, tape) - targets;

  AbmBatchLoss out;
  for (Eigen::Index i = 0; i < b; ++i) {
    const double sq = residual.col(i).squaredNorm();
    if (!std::isfinite(sq)) {
      throw NumericalError("non-finite ABM loss at sample " + std::to_string(i), static_cast<std::size_t>(i));
    }
    out.loss += sq * scale;
  }
  const Matrix cot = 2.0 * scale * residual;
  out.grads = GradBundle::zeros_like(net_d);
  const Matrix in_grad = backward_batch(net_d, inputs, tape, cot, want_y0_cotangents, out.grads);
  if (want_y0_cotangents) {
    out.y0_cotangents.reserve(batch.size());
    for (Eigen::Index i = 0; i < b; ++i) {
      const double t = draws[static_cast<std::size_t>(i)].t;
      out.y0_cotangents.push_back(in_grad.col(i).segment(1, d) + (1.0 - t) * in_grad.col(i).segment(1 + d, d) +
                                  cot.col(i));
    }
  }
  return out;
}

AbmStep abm_training_step(const Net& net_d, std::span<const CouplingSample> batch, const BridgeConfig& cfg, Seed seed) {
  if (batch.empty()) throw DomainError("ABM batch is empty");
  const auto draws = draw_abm_noise(batch.size(), batch.front().y0.size(), cfg, seed);
  auto res = abm_batch_loss(net_d, batch, draws, cfg.sigma, cfg.t_clamp, false);
  return {res.loss, std::move(res.grads)};
}

DiffusionPath simulate_sde(const DriftField& drift, const State& y0, double sigma, std::size_t steps, Seed seed) {
  if (steps < 2) throw ConfigError("SDE needs at least 2 steps");
  Rng rng(seed);
  const double dt = 1.0 / static_cast<double>(steps);
  const double noise = sigma * std::sqrt(dt);
  DiffusionPath path;
  path.y0 = y0;
  path.grid.resize(steps + 1);
  path.states.reserve(steps + 1);
  path.states.push_back(y0);
  for (std::size_t k = 0; k <= steps; ++k) path.grid[k] = static_cast<double>(k) * dt;
  path.grid[steps] = 1.0;
  for (std::size_t k = 0; k < steps; ++k) {
    const State& y = path.states.back();
    State next = y + drift.eval(path.grid[k], y0, y) * dt + noise * rng.normal_vector(y.size());
    if (!next.allFinite()) throw NumericalError("non-finite SDE state at step " + std::to_string(k + 1), k + 1);
    path.states.push_back(std::move(next));
  }
  return path;
}

State generate_step(const Net& net_e, const Net& net_d, const State& x_t, const BridgeConfig& cfg, Seed seed) {
  std::size_t steps = cfg.steps;
  if (cfg.t_steps_jitter) {
    Rng rng(derive_seed(seed, 3));
    steps = 8 + rng.index(3);
  }
  const EncoderOut enc = encode(net_e, x_t, derive_seed(seed, 1));
  return simulate_sde(NetDrift(net_d), enc.y0, cfg.sigma, steps, derive_seed(seed, 2)).states.back();
}

Trajectory rollout(const Net& net_e, const Net& net_d, const State& x0, std::size_t n_steps, const BridgeConfig& cfg,
                   Seed seed) {
  Trajectory traj;
  traj.reserve(n_steps + 1);
  traj.push_back(x0);
  for (std::size_t n = 0; n < n_steps; ++n) {
    try {
      traj.push_back(generate_step(net_e, net_d, traj.back(), cfg, derive_seed(seed, n)));
    } catch (const NumericalError& e) {
      throw RolloutError(std::string("rollout failed at step ") + std::to_string(n + 1) + ": " + e.what(), n + 1,
                         std::move(traj));
    }
  }
  return traj;
}

}  // namespace vbridge
