// vbridge - variational bridge models for time-coarsened stochastic dynamics
// Copyright 2026 The vbridge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vbridge/types.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace vbridge {

// Small dense feedforward networks with hand-written reverse mode. These stand
// in for the encoder, the decoder drift and the controlled decoder drift. All
// arithmetic is double precision.

enum class Activation { identity, tanh, silu };

struct TimeEmbedding {
  enum class Kind { none, scalar_append, sinusoidal };
  Kind kind = Kind::none;
  /// Number of frequencies for Kind::sinusoidal.
  std::size_t frequencies = 0;

  bool operator==(const TimeEmbedding&) const = default;
};

/// Architecture of a Net. When a time embedding is configured, input[0] is the
/// diffusion time and is expanded before the first layer.
struct NetSpec {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden_dims{8};
  std::size_t output_dim = 1;
  Activation activation = Activation::tanh;
  TimeEmbedding time_embedding{};

  /// Throws ConfigError on zero dims or empty hidden_dims.
  void validate() const;

  /// Width of the first layer's input after the time embedding.
  std::size_t feature_dim() const;

  bool operator==(const NetSpec&) const = default;
};

struct Layer {
  Matrix weight;  // out x in
  Vector bias;
};

class Net {
 public:
  /// Throws ShapeError if the layer shapes do not chain from spec.feature_dim()
  /// through spec.hidden_dims to spec.output_dim.
  Net(NetSpec spec, std::vector<Layer> layers);

  const NetSpec& spec() const noexcept { return spec_; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  std::vector<Layer>& layers() noexcept { return layers_; }

  std::size_t parameter_count() const;

  /// Parameters flattened layer by layer: weight (row-major) then bias.
  Vector flat_parameters() const;
  void set_flat_parameters(const Vector& flat);

  bool operator==(const Net& other) const;

 private:
  NetSpec spec_;
  std::vector<Layer> layers_;
};

/// Gradient of a scalar w.r.t. a Net's parameters, plus optionally its input.
struct GradBundle {
  std::vector<Layer> param_grads;
  std::optional<Vector> input_grad;

  static GradBundle zeros_like(const Net& net);

  GradBundle& operator+=(const GradBundle& other);
  GradBundle& operator*=(double s);

  double squared_norm() const;
  Vector flat() const;
};

/// Intermediate values kept by a forward pass so backward() need not recompute them.
struct Tape {
  Vector features;
  std::vector<Vector> pre_activations;
  std::vector<Vector> activations;  // activations[0] = features
};

/// Uniform(-sqrt(1/fan_in), sqrt(1/fan_in)) weights, zero biases.
Net init_net(const NetSpec& spec, Seed seed);

Vector forward(const Net& net, const Vector& input);
Vector forward(const Net& net, const Vector& input, Tape& tape);

/// Vector-Jacobian product of the network at `input` with `cotangent`:
/// parameter gradients of <cotangent, forward(net, input)>, and the input
/// gradient when requested.
GradBundle grad(const Net& net, const Vector& input, const Vector& cotangent, bool want_input_grad);

/// Accumulates the VJP into `accum` using a tape from forward(). If
/// want_input_grad, returns the input gradient; otherwise an empty vector.
Vector backward(const Net& net, const Vector& input, const Tape& tape, const Vector& cotangent,
                bool want_input_grad, GradBundle& accum);

/// Column-batched variants: inputs are input_dim x B, one sample per column.
struct BatchTape {
  Matrix features;
  std::vector<Matrix> pre_activations;
  std::vector<Matrix> activations;
};

Matrix forward_batch(const Net& net, const Matrix& inputs);
Matrix forward_batch(const Net& net, const Matrix& inputs, BatchTape& tape);

/// Sums the per-column VJPs into `accum`; returns input gradients column-wise
/// when requested, otherwise an empty matrix.
Matrix backward_batch(const Net& net, const Matrix& inputs, const BatchTape& tape, const Matrix& cotangents,
                      bool want_input_grad, GradBundle& accum);

/// Adam state. Moments mirror the Net's parameter shapes.
struct OptState {
  std::vector<Layer> first_moment;
  std::vector<Layer> second_moment;
  std::uint64_t step_count = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static OptState for_net(const Net& net, double lr);
};

/// One Adam update of `net` in place. A non-finite gradient component throws
/// NumericalError carrying the layer index, leaving both arguments untouched.
void opt_step(OptState& opt, Net& net, const GradBundle& grads);

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

}  // namespace vbridge
