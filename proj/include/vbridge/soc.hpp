// vbridge - variational bridge models for time-coarsened stochastic dynamics
// Copyright 2026 The vbridge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vbridge/bridge.hpp"
#include "vbridge/nn.hpp"
#include "vbridge/types.hpp"

#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace vbridge {

// Reward finetuning of the decoder drift by adjoint matching. A copy of the
// frozen drift, net_u, is regressed so that net_u - net_d = -sigma^2 * a(t),
// where a is the lean adjoint propagated backwards from the reward gradient
// along rollouts of net_u.

struct SocConfig {
  /// KL regularization strength; larger keeps net_u closer to net_d.
  double beta = 4e-4;
  double lr_rl = 5e-5;
  double aug_max_angle = std::numbers::pi / 3.0;
  double aug_translation_scale = 1.0;
  std::size_t iterations = 200;
  /// Grid times drawn per trajectory; all reuse one backward solve.
  std::size_t t_samples_per_iter = 4;
  std::size_t trajectories_per_iter = 1;
  /// Consecutive failed iterations tolerated before the run aborts.
  std::size_t failure_budget = 10;

  void validate() const;
  bool operator==(const SocConfig&) const = default;
};

enum class RewardKind { neg_distance };

struct RewardSpec {
  State x_ref;
  RewardKind kind = RewardKind::neg_distance;
};

struct Reward {
  double value = 0.0;
  Vector grad;
};

/// r = -|x - x_ref| / sqrt(D). The gradient is zero at x == x_ref.
Reward reward_and_grad(const State& x, const RewardSpec& spec);

struct LeanAdjoint {
  /// One cotangent per grid time, values[T] == terminal.
  std::vector<Vector> values;
  Vector terminal;
};

/// Backward Euler solve a_{k-1} = a_k + dt * (a_k^T d b / d y)(t_k, y0, Y_k)
/// from the given terminal value. Throws NumericalError with the grid index
/// of the first non-finite value.
LeanAdjoint solve_lean_adjoint(const DriftField& base, const DiffusionPath& path, const Vector& terminal);

/// Terminal value -(1/beta) * grad r(Y_1). Throws DomainError for beta <= 0.
LeanAdjoint solve_lean_adjoint(const DriftField& base, const DiffusionPath& path, const RewardSpec& spec, double beta);

inline LeanAdjoint solve_lean_adjoint(const Net& net_d, const DiffusionPath& path, const RewardSpec& spec,
                                      double beta) {
  return solve_lean_adjoint(NetDrift(net_d), path, spec, beta);
}

struct AdjointLoss {
  double loss = 0.0;
  GradBundle grads;
};

/// |net_u(t_k, y0, Y_k) - b(t_k, y0, Y_k) + sigma^2 a_k|^2 with gradients for
/// net_u only. Throws DomainError when t_index >= T, ShapeError on mismatched
/// dimensions.
AdjointLoss adjoint_loss_step(const Net& net_u, const DriftField& base, const DiffusionPath& path,
                              const LeanAdjoint& adj, std::size_t t_index, double sigma);

inline AdjointLoss adjoint_loss_step(const Net& net_u, const Net& net_d_frozen, const DiffusionPath& path,
                                     const LeanAdjoint& adj, std::size_t t_index, double sigma) {
  return adjoint_loss_step(net_u, NetDrift(net_d_frozen), path, adj, t_index, sigma);
}

/// u = (net_u - net_d) / sigma at one point.
Vector control(const Net& net_u, const Net& net_d, double t, const State& y0, const State& yt, double sigma);

struct Augmented {
  State x;
  double theta = 0.0;
  Vector translation;
};

/// Rotation of x0 about x_ref by theta ~ U(-max_angle, max_angle) when D == 2,
/// then a N(0, scale^2) translation of every coordinate.
Augmented augment_detailed(const State& x0, const State& x_ref, const SocConfig& cfg, Seed seed);

inline State augment(const State& x0, const State& x_ref, const SocConfig& cfg, Seed seed) {
  return augment_detailed(x0, x_ref, cfg, seed).x;
}

/// KL(N(m1, s1) || N(m0, s0)) for full covariances.
double gaussian_kl(const Vector& m1, const Matrix& s1, const Vector& m0, const Matrix& s0);

/// Sum of one-step transition KLs between the Euler-Maruyama kernels of
/// `controlled` and `base` along the given path: the discrete path-measure KL
/// conditioned on that path.
double discrete_path_kl(const DriftField& controlled, const DriftField& base, const DiffusionPath& path,
                        double sigma);

struct RlTarget {
  State x0;
  State x_ref;
};

struct RlLogRecord {
  std::size_t iter = 0;
  double reward_mean = 0.0;
  double adjoint_loss = 0.0;
  double grad_norm = 0.0;
  /// Set when the iteration failed and no update was applied.
  std::optional<std::string> error;
};

using RlLogCallback = std::function<void(const RlLogRecord&)>;

struct RlResult {
  Net net_u;
  std::vector<RlLogRecord> log;
};

/// Adjoint-matching loop. net_u starts as a copy of net_d_frozen; each
/// iteration augments a sampled target, encodes, rolls out under net_u,
/// solves the lean adjoint through net_d_frozen and takes one Adam step on
/// the mean adjoint loss. Failed iterations are logged and skipped; more
/// than failure_budget in a row throws NumericalError.
RlResult rl_finetune(const Net& net_e_frozen, const Net& net_d_frozen, const std::vector<RlTarget>& dataset,
                     const SocConfig& soc, const BridgeConfig& bridge, Seed seed,
                     const RlLogCallback& on_iter = {});

}  // namespace vbridge
