// vbridge - variational bridge models for time-coarsened stochastic dynamics
// Copyright 2026 The vbridge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vbridge/nn.hpp"
#include "vbridge/types.hpp"

#include <cmath>

namespace vbridge {

struct EncoderConfig {
  /// Prior standard deviation of the latent around the input.
  double sigma_e = std::sqrt(0.5);
  /// Strength of the Gaussian position perturbation applied to training inputs.
  double sigma_p = 0.2;

  void validate() const;
  bool operator==(const EncoderConfig&) const = default;
};

/// Log-variance outputs are clamped to this range before exponentiation.
inline constexpr double kLogVarMin = -10.0;
inline constexpr double kLogVarMax = 4.0;

struct EncoderOut {
  State y0;
  /// Raw network output (unclamped).
  Vector log_var;
  /// Standard-normal draw used for y0; kept for reparameterization gradients.
  Vector eps;
};

/// x0 + sigma_p * eps, eps ~ N(0, I).
State perturb(const State& x0, double sigma_p, Seed seed);

/// log_var = net_e(x0); y0 = x0 + exp(clamp(log_var) / 2) * eps.
/// Throws ShapeError if net_e is not D -> D, NumericalError on non-finite output.
EncoderOut encode(const Net& net_e, const State& x0, Seed seed);

struct KlLoss {
  double value = 0.0;
  /// d value / d log_var, per coordinate.
  Vector grad;
};

/// KL(N(0, V) || N(0, sigma_e^2)) averaged over coordinates, with V = exp(log_var).
KlLoss kl_loss(const Vector& log_var, double sigma_e);

/// d y0 / d log_var (diagonal), zero where log_var sits outside the clamp range.
Vector reparam_log_var_jacobian(const EncoderOut& out);

}  // namespace vbridge
