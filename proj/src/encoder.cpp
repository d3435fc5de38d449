// vbridge - variational bridge models for time-coarsened stochastic dynamics
// Copyright 2026 The vbridge Authors
// SPDX-License-Identifier: Apache-2.0

#include "vbridge/encoder.hpp"

#include "vbridge/errors.hpp"

#include <algorithm>

namespace vbridge {

void EncoderConfig::validate() const {
  if (!(sigma_e > 0.0)) throw ConfigError("encoder.sigma_e must be > 0");
  if (!(sigma_p >= 0.0)) throw ConfigError("encoder.sigma_p must be >= 0");
}

State perturb(const State& x0, double sigma_p, Seed seed) {
  if (sigma_p == 0.0) return x0;
  Rng rng(seed);
  return x0 + sigma_p * rng.normal_vector(x0.size());
}

EncoderOut encode(const Net& net_e, const State& x0, Seed seed) {
  const auto d = static_cast<std::size_t>(x0.size());
  if (net_e.spec().input_dim != d || net_e.spec().output_dim != d) {
    throw ShapeError("encoder net must map D -> D (D = " + std::to_string(d) + ")");
  }
  EncoderOut out;
  out.log_var = forward(net_e, x0);
  if (!out.log_var.allFinite()) throw NumericalError("encoder produced a non-finite log-variance");
  Rng rng(seed);
  out.eps = rng.normal_vector(x0.size());
  const Vector std_dev = (out.log_var.array().max(kLogVarMin).min(kLogVarMax) * 0.5).exp();
  out.y0 = x0 + std_dev.cwiseProduct(out.eps);
  return out;
}

KlLoss kl_loss(const Vector& log_var, double sigma_e) {
  if (!(sigma_e > 0.0)) throw DomainError("sigma_e must be > 0");
  const double n = static_cast<double>(log_var.size());
  const double log_prior = 2.0 * std::log(sigma_e);
  const double inv_prior = 1.0 / (sigma_e * sigma_e);
  KlLoss out;
  out.grad.resize(log_var.size());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < log_var.size(); ++i) {
    const double v = std::exp(log_var[i]);
    sum += 1.0 + log_var[i] - log_prior - v * inv_prior;
    out.grad[i] = -0.5 * (1.0 - v * inv_prior) / n;
  }
  out.value = -0.5 * sum / n;
  return out;
}

Vector reparam_log_var_jacobian(const EncoderOut& out) {
  Vector j(out.log_var.size());
  for (Eigen::Index i = 0; i < j.size(); ++i) {
    const double lv = out.log_var[i];
    j[i] = (lv < kLogVarMin || lv > kLogVarMax) ? 0.0 : 0.5 * std::exp(0.5 * lv) * out.eps[i];
  }
  return j;
}

}  // namespace vbridge
