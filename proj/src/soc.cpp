// vbridge - variational bridge models for time-coarsened stochastic dynamics
// Copyright 2026 The vbridge Authors
// SPDX-License-Identifier: Apache-2.0

#include "vbridge/soc.hpp"

#include "vbridge/encoder.hpp"
#include "vbridge/errors.hpp"

#include <cmath>
#include <numbers>

namespace vbridge {

void SocConfig::validate() const {
  if (!(beta > 0.0)) throw ConfigError("soc.beta must be > 0");
  if (!(lr_rl > 0.0)) throw ConfigError("soc.lr_rl must be > 0");
  if (!(aug_max_angle >= 0.0 && aug_max_angle <= std::numbers::pi)) {
    throw ConfigError("soc.aug_max_angle must lie in [0, pi]");
  }
  if (!(aug_translation_scale >= 0.0)) throw ConfigError("soc.aug_translation_scale must be >= 0");
  if (iterations == 0) throw ConfigError("soc.iterations must be >= 1");
  if (t_samples_per_iter == 0) throw ConfigError("soc.t_samples_per_iter must be >= 1");
  if (trajectories_per_iter == 0) throw ConfigError("soc.trajectories_per_iter must be >= 1");
}

Reward reward_and_grad(const State& x, const RewardSpec& spec) {
  if (x.size() != spec.x_ref.size()) throw ShapeError("reward state and x_ref differ in dimension");
  const Vector diff = x - spec.x_ref;
  const double dist = diff.norm();
  const double root_d = std::sqrt(static_cast<double>(x.size()));
  if (dist == 0.0) return {0.0, Vector::Zero(x.size())};
  return {-dist / root_d, -diff / (root_d * dist)};
}

LeanAdjoint solve_lean_adjoint(const DriftField& base, const DiffusionPath& path, const Vector& terminal) {
  const std::size_t steps = path.steps();
  if (path.states.size() != steps + 1 || steps == 0) throw ShapeError("diffusion path is incomplete");
  if (terminal.size() != path.states.back().size()) throw ShapeError("adjoint terminal does not match the path");
  if (!terminal.allFinite()) throw NumericalError("non-finite adjoint at grid index " + std::to_string(steps), steps);
  LeanAdjoint adj;
  adj.terminal = terminal;
  adj.values.assign(steps + 1, Vector());
  adj.values[steps] = terminal;
  for (std::size_t k = steps; k > 0; --k) {
    const double dt = path.grid[k] - path.grid[k - 1];
    const Vector& a = adj.values[k];
    Vector prev = a + dt * base.vjp_state(path.grid[k], path.y0, path.states[k], a);
    if (!prev.allFinite()) throw NumericalError("non-finite adjoint at grid index " + std::to_string(k - 1), k - 1);
    adj.values[k - 1] = std::move(prev);
  }
  return adj;
}

LeanAdjoint solve_lean_adjoint(const DriftField& base, const DiffusionPath& path, const RewardSpec& spec,
                               double beta) {
  if (!(beta > 0.0)) throw DomainError("beta must be > 0");
  const Reward r = reward_and_grad(path.states.back(), spec);
  return solve_lean_adjoint(base, path, Vector(-r.grad / beta));
}

AdjointLoss adjoint_loss_step(const Net& net_u, const DriftField& base, const DiffusionPath& path,
                              const LeanAdjoint& adj, std::size_t t_index, double sigma) {
  if (t_index >= path.steps()) {
    throw DomainError("adjoint loss time index " + std::to_string(t_index) + " outside [0, " +
                      std::to_string(path.steps()) + ")");
  }
  if (adj.values.size() != path.states.size()) throw ShapeError("adjoint and path have different grids");
  const double t = path.grid[t_index];
  const State& yt = path.states[t_index];
  const Vector in = decoder_input(t, path.y0, yt);
  if (in.size() != static_cast<Eigen::Index>(net_u.spec().input_dim)) {
    throw ShapeError("controlled drift net does not match the path dimension");
  }
  Tape tape;
  const Vector residual = forward(net_u, in, tape) - base.eval(t, path.y0, yt) + sigma * sigma * adj.values[t_index];
  if (residual.size() != yt.size()) throw ShapeError("controlled drift output does not match the path dimension");
  AdjointLoss out;
  out.loss = residual.squaredNorm();
  out.grads = GradBundle::zeros_like(net_u);
  backward(net_u, in, tape, 2.0 * residual, false, out.grads);
  return out;
}

Vector control(const Net& net_u, const Net& net_d, double t, const State& y0, const State& yt, double sigma) {
  const Vector in = decoder_input(t, y0, yt);
  return (forward(net_u, in) - forward(net_d, in)) / sigma;
}

Augmented augment_detailed(const State& x0, const State& x_ref, const SocConfig& cfg, Seed seed) {
  if (x0.size() != x_ref.size()) throw ShapeError("augment: x0 and x_ref differ in dimension");
  Rng rng(seed);
  Augmented out;
  out.x = x0;
  if (x0.size() == 2) {
    out.theta = rng.uniform(-cfg.aug_max_angle, cfg.aug_max_angle);
    const double c = std::cos(out.theta);
    const double s = std::sin(out.theta);
    const Vector rel = x0 - x_ref;
    out.x[0] = x_ref[0] + c * rel[0] - s * rel[1];
    out.x[1] = x_ref[1] + s * rel[0] + c * rel[1];
  }
  out.translation = cfg.aug_translation_scale * rng.normal_vector(x0.size());
  out.x += out.translation;
  return out;
}

double gaussian_kl(const Vector& m1, const Matrix& s1, const Vector& m0, const Matrix& s0) {
  const Eigen::Index k = m1.size();
  if (m0.size() != k || s1.rows() != k || s1.cols() != k || s0.rows() != k || s0.cols() != k) {
    throw ShapeError("gaussian_kl: inconsistent dimensions");
  }
  const Eigen::LLT<Matrix> l0(s0);
  const Eigen::LLT<Matrix> l1(s1);
  if (l0.info() != Eigen::Success || l1.info() != Eigen::Success) {
    throw NumericalError("gaussian_kl: covariance is not positive definite");
  }
  const Vector dm = m0 - m1;
  const double trace_term = l0.solve(s1).trace();
  const double maha = dm.dot(l0.solve(dm));
  const Matrix& L0 = l0.matrixL();
  const Matrix& L1 = l1.matrixL();
  const double logdet0 = 2.0 * L0.diagonal().array().log().sum();
  const double logdet1 = 2.0 * L1.diagonal().array().log().sum();
  return 0.5 * (trace_term + maha - static_cast<double>(k) + logdet0 - logdet1);
}

double discrete_path_kl(const DriftField& controlled, const DriftField& base, const DiffusionPath& path,
                        double sigma) {
  double total = 0.0;
  for (std::size_t k = 0; k < path.steps(); ++k) {
    const double dt = path.grid[k + 1] - path.grid[k];
    const double t = path.grid[k];
    const State& y = path.states[k];
    const Matrix cov = Matrix::Identity(y.size(), y.size()) * (sigma * sigma * dt);
    total += gaussian_kl(y + controlled.eval(t, path.y0, y) * dt, cov, y + base.eval(t, path.y0, y) * dt, cov);
  }
  return total;
}

RlResult rl_finetune(const Net& net_e_frozen, const Net& net_d_frozen, const std::vector<RlTarget>& dataset,
                     const SocConfig& soc, const BridgeConfig& bridge, Seed seed, const RlLogCallback& on_iter) {
  soc.validate();
  bridge.validate();
  if (dataset.empty()) throw DataError("RL target dataset is empty");
  const NetDrift base(net_d_frozen);
  RlResult result{net_d_frozen, {}};
  Net& net_u = result.net_u;
  OptState opt = OptState::for_net(net_u, soc.lr_rl);
  std::size_t consecutive_failures = 0;

  for (std::size_t iter = 1; iter <= soc.iterations; ++iter) {
    const Seed iter_seed = derive_seed(seed, iter);
    Rng rng(derive_seed(iter_seed, 0));
    RlLogRecord rec;
    rec.iter = iter;
    try {
      GradBundle total = GradBundle::zeros_like(net_u);
      const double weight = 1.0 / static_cast<double>(soc.trajectories_per_iter * soc.t_samples_per_iter);
      for (std::size_t j = 0; j < soc.trajectories_per_iter; ++j) {
        const Seed traj_seed = derive_seed(iter_seed, 1 + j);
        const RlTarget& target = dataset[rng.index(dataset.size())];
        const State x0 = augment(target.x0, target.x_ref, soc, derive_seed(traj_seed, 0));
        const EncoderOut enc = encode(net_e_frozen, x0, derive_seed(traj_seed, 1));
        const DiffusionPath path = simulate_sde(NetDrift(net_u), enc.y0, bridge.sigma, bridge.steps,
                                                derive_seed(traj_seed, 2));
        const RewardSpec spec{target.x_ref, RewardKind::neg_distance};
        rec.reward_mean += reward_and_grad(path.states.back(), spec).value / static_cast<double>(soc.trajectories_per_iter);
        const LeanAdjoint adj = solve_lean_adjoint(base, path, spec, soc.beta);
        for (std::size_t s = 0; s < soc.t_samples_per_iter; ++s) {
          AdjointLoss al = adjoint_loss_step(net_u, base, path, adj, rng.index(bridge.steps), bridge.sigma);
          rec.adjoint_loss += al.loss * weight;
          al.grads *= weight;
          total += al.grads;
        }
      }
      if (!std::isfinite(rec.adjoint_loss)) throw NumericalError("non-finite adjoint loss");
      rec.grad_norm = std::sqrt(total.squared_norm());
      opt_step(opt, net_u, total);
      consecutive_failures = 0;
    } catch (const NumericalError& e) {
      rec.error = e.what();
      if (on_iter) on_iter(rec);
      result.log.push_back(rec);
      if (++consecutive_failures > soc.failure_budget) {
        throw NumericalError("RL finetuning aborted at iteration " + std::to_string(iter) + " after " +
                                 std::to_string(consecutive_failures) + " consecutive failures: " + e.what(),
                             iter);
      }
      continue;
    }
    if (on_iter) on_iter(rec);
    result.log.push_back(std::move(rec));
  }
  return result;
}

}  // namespace vbridge
