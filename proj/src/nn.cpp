// vbridge - variational bridge models for time-coarsened stochastic dynamics
// Copyright 2026 The vbridge Authors
// SPDX-License-Identifier: Apache-2.0

#include "vbridge/nn.hpp"

#include "vbridge/errors.hpp"

#include <cmath>
#include <numbers>

namespace vbridge {

namespace {

double activate(Activation a, double x) {
  switch (a) {
    case Activation::identity:
      return x;
    case Activation::tanh:
      return std::tanh(x);
    case Activation::silu:
      return x / (1.0 + std::exp(-x));
  }
  return x;
}

double activate_derivative(Activation a, double x) {
  switch (a) {
    case Activation::identity:
      return 1.0;
    case Activation::tanh: {
      const double th = std::tanh(x);
      return 1.0 - th * th;
    }
    case Activation::silu: {
      const double s = 1.0 / (1.0 + std::exp(-x));
      return s * (1.0 + x * (1.0 - s));
    }
  }
  return 1.0;
}

Vector embed(const NetSpec& spec, const Vector& input) {
  if (spec.time_embedding.kind != TimeEmbedding::Kind::sinusoidal) return input;
  const std::size_t k = spec.time_embedding.frequencies;
  const double t = input[0];
  Vector out(spec.feature_dim());
  out[0] = t;
  for (std::size_t f = 0; f < k; ++f) {
    const double w = std::numbers::pi * static_cast<double>(f + 1);
    out[static_cast<Eigen::Index>(1 + 2 * f)] = std::sin(w * t);
    out[static_cast<Eigen::Index>(2 + 2 * f)] = std::cos(w * t);
  }
  const auto rest = static_cast<Eigen::Index>(spec.input_dim - 1);
  out.tail(rest) = input.tail(rest);
  return out;
}

// Pulls a feature-space gradient back through the time embedding.
Vector embed_backward(const NetSpec& spec, const Vector& input, const Vector& feature_grad) {
  if (spec.time_embedding.kind != TimeEmbedding::Kind::sinusoidal) return feature_grad;
  const std::size_t k = spec.time_embedding.frequencies;
  const double t = input[0];
  Vector out(static_cast<Eigen::Index>(spec.input_dim));
  double dt = feature_grad[0];
  for (std::size_t f = 0; f < k; ++f) {
    const double w = std::numbers::pi * static_cast<double>(f + 1);
    dt += feature_grad[static_cast<Eigen::Index>(1 + 2 * f)] * w * std::cos(w * t);
    dt -= feature_grad[static_cast<Eigen::Index>(2 + 2 * f)] * w * std::sin(w * t);
  }
  out[0] = dt;
  const auto rest = static_cast<Eigen::Index>(spec.input_dim - 1);
  out.tail(rest) = feature_grad.tail(rest);
  return out;
}

Matrix embed_batch(const NetSpec& spec, const Matrix& inputs) {
  if (spec.time_embedding.kind != TimeEmbedding::Kind::sinusoidal) return inputs;
  Matrix out(static_cast<Eigen::Index>(spec.feature_dim()), inputs.cols());
  for (Eigen::Index c = 0; c < inputs.cols(); ++c) out.col(c) = embed(spec, inputs.col(c));
  return out;
}

void apply_activation(Activation act, Matrix& z) {
  if (act == Activation::identity) return;
  if (act == Activation::tanh) {
    z = z.array().tanh();
    return;
  }
  z = z.array() / (1.0 + (-z.array()).exp());
}

// Multiplies `back` elementwise by the activation derivative at `z`.
void scale_by_derivative(Activation act, const Matrix& z, Matrix& back) {
  if (act == Activation::identity) return;
  if (act == Activation::tanh) {
    back.array() *= 1.0 - z.array().tanh().square();
    return;
  }
  const Eigen::ArrayXXd s = 1.0 / (1.0 + (-z.array()).exp());
  back.array() *= s * (1.0 + z.array() * (1.0 - s));
}

void check_input(const Net& net, const Vector& input) {
  if (static_cast<std::size_t>(input.size()) != net.spec().input_dim) {
    throw ShapeError("net input has length " + std::to_string(input.size()) + ", expected " +
                     std::to_string(net.spec().input_dim));
  }
}

}  // namespace

void NetSpec::validate() const {
  if (input_dim == 0) throw ConfigError("net input_dim must be >= 1");
  if (output_dim == 0) throw ConfigError("net output_dim must be >= 1");
  if (hidden_dims.empty()) throw ConfigError("net hidden_dims must be non-empty");
  for (auto h : hidden_dims) {
    if (h == 0) throw ConfigError("net hidden dims must be >= 1");
  }
  if (time_embedding.kind == TimeEmbedding::Kind::sinusoidal && time_embedding.frequencies == 0) {
    throw ConfigError("sinusoidal time embedding needs at least one frequency");
  }
}

std::size_t NetSpec::feature_dim() const {
  if (time_embedding.kind == TimeEmbedding::Kind::sinusoidal) {
    return input_dim + 2 * time_embedding.frequencies;
  }
  return input_dim;
}

Net::Net(NetSpec spec, std::vector<Layer> layers) : spec_(std::move(spec)), layers_(std::move(layers)) {
  spec_.validate();
  if (layers_.size() != spec_.hidden_dims.size() + 1) {
    throw ShapeError("net has " + std::to_string(layers_.size()) + " layers, spec implies " +
                     std::to_string(spec_.hidden_dims.size() + 1));
  }
  std::size_t in = spec_.feature_dim();
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const std::size_t out = l < spec_.hidden_dims.size() ? spec_.hidden_dims[l] : spec_.output_dim;
    const auto& layer = layers_[l];
    if (static_cast<std::size_t>(layer.weight.rows()) != out ||
        static_cast<std::size_t>(layer.weight.cols()) != in ||
        static_cast<std::size_t>(layer.bias.size()) != out) {
      throw ShapeError("layer " + std::to_string(l) + " shape does not match spec");
    }
    in = out;
  }
}

std::size_t Net::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

Vector Net::flat_parameters() const {
  Vector flat(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index k = 0;
  for (const auto& l : layers_) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) flat[k++] = l.weight(r, c);
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) flat[k++] = l.bias[i];
  }
  return flat;
}

void Net::set_flat_parameters(const Vector& flat) {
  if (static_cast<std::size_t>(flat.size()) != parameter_count()) {
    throw ShapeError("flat parameter vector has wrong length");
  }
  Eigen::Index k = 0;
  for (auto& l : layers_) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = flat[k++];
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias[i] = flat[k++];
  }
}

bool Net::operator==(const Net& other) const {
  if (!(spec_ == other.spec_) || layers_.size() != other.layers_.size()) return false;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].weight != other.layers_[l].weight || layers_[l].bias != other.layers_[l].bias) {
      return false;
    }
  }
  return true;
}

GradBundle GradBundle::zeros_like(const Net& net) {
  GradBundle g;
  g.param_grads.reserve(net.layers().size());
  for (const auto& l : net.layers()) {
    g.param_grads.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
  }
  return g;
}

GradBundle& GradBundle::operator+=(const GradBundle& other) {
  if (other.param_grads.size() != param_grads.size()) throw ShapeError("gradient bundles differ in depth");
  for (std::size_t l = 0; l < param_grads.size(); ++l) {
    param_grads[l].weight += other.param_grads[l].weight;
    param_grads[l].bias += other.param_grads[l].bias;
  }
  if (other.input_grad) {
    if (input_grad) {
      *input_grad += *other.input_grad;
    } else {
      input_grad = other.input_grad;
    }
  }
  return *this;
}

GradBundle& GradBundle::operator*=(double s) {
  for (auto& l : param_grads) {
    l.weight *= s;
    l.bias *= s;
  }
  if (input_grad) *input_grad *= s;
  return *this;
}

double GradBundle::squared_norm() const {
  double s = 0.0;
  for (const auto& l : param_grads) s += l.weight.squaredNorm() + l.bias.squaredNorm();
  return s;
}

Vector GradBundle::flat() const {
  Eigen::Index n = 0;
  for (const auto& l : param_grads) n += l.weight.size() + l.bias.size();
  Vector flat(n);
  Eigen::Index k = 0;
  for (const auto& l : param_grads) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) flat[k++] = l.weight(r, c);
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) flat[k++] = l.bias[i];
  }
  return flat;
}

Net init_net(const NetSpec& spec, Seed seed) {
  spec.validate();
  Rng rng(seed);
  std::vector<Layer> layers;
  std::size_t in = spec.feature_dim();
  const std::size_t depth = spec.hidden_dims.size() + 1;
  for (std::size_t l = 0; l < depth; ++l) {
    const std::size_t out = l < spec.hidden_dims.size() ? spec.hidden_dims[l] : spec.output_dim;
    const double bound = std::sqrt(1.0 / static_cast<double>(in));
    Layer layer{Matrix(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in)),
                Vector::Zero(static_cast<Eigen::Index>(out))};
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = rng.uniform(-bound, bound);
    layers.push_back(std::move(layer));
    in = out;
  }
  return Net(spec, std::move(layers));
}

Vector forward(const Net& net, const Vector& input) {
  check_input(net, input);
  const auto act = net.spec().activation;
  Vector h = embed(net.spec(), input);
  const auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Vector z = layers[l].weight * h + layers[l].bias;
    if (l + 1 < layers.size()) {
      for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = activate(act, z[i]);
    }
    h = std::move(z);
  }
  return h;
}

Vector forward(const Net& net, const Vector& input, Tape& tape) {
  check_input(net, input);
  const auto act = net.spec().activation;
  const auto& layers = net.layers();
  tape.features = embed(net.spec(), input);
  tape.pre_activations.resize(layers.size());
  tape.activations.resize(layers.size());
  tape.activations[0] = tape.features;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    tape.pre_activations[l] = layers[l].weight * tape.activations[l] + layers[l].bias;
    if (l + 1 < layers.size()) {
      Vector a(tape.pre_activations[l].size());
      for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = activate(act, tape.pre_activations[l][i]);
      tape.activations[l + 1] = std::move(a);
    }
  }
  return tape.pre_activations.back();
}

Vector backward(const Net& net, const Vector& input, const Tape& tape, const Vector& cotangent,
                bool want_input_grad, GradBundle& accum) {
  if (static_cast<std::size_t>(cotangent.size()) != net.spec().output_dim) {
    throw ShapeError("cotangent has length " + std::to_string(cotangent.size()) + ", expected " +
                     std::to_string(net.spec().output_dim));
  }
  const auto act = net.spec().activation;
  const auto& layers = net.layers();
  Vector delta = cotangent;
  for (std::size_t l = layers.size(); l-- > 0;) {
    accum.param_grads[l].weight.noalias() += delta * tape.activations[l].transpose();
    accum.param_grads[l].bias += delta;
    if (l == 0 && !want_input_grad) break;
    Vector back = layers[l].weight.transpose() * delta;
    if (l > 0) {
      const Vector& z = tape.pre_activations[l - 1];
      for (Eigen::Index i = 0; i < back.size(); ++i) back[i] *= activate_derivative(act, z[i]);
    }
    delta = std::move(back);
  }
  if (!want_input_grad) return {};
  return embed_backward(net.spec(), input, delta);
}

GradBundle grad(const Net& net, const Vector& input, const Vector& cotangent, bool want_input_grad) {
  Tape tape;
  forward(net, input, tape);
  GradBundle g = GradBundle::zeros_like(net);
  Vector ig = backward(net, input, tape, cotangent, want_input_grad, g);
  if (want_input_grad) g.input_grad = std::move(ig);
  return g;
}

Matrix forward_batch(const Net& net, const Matrix& inputs) {
  BatchTape tape;
  return forward_batch(net, inputs, tape);
}

Matrix forward_batch(const Net& net, const Matrix& inputs, BatchTape& tape) {
  if (static_cast<std::size_t>(inputs.rows()) != net.spec().input_dim) {
    throw ShapeError("net input has length " + std::to_string(inputs.rows()) + ", expected " +
                     std::to_string(net.spec().input_dim));
  }
  const auto act = net.spec().activation;
  const auto& layers = net.layers();
  tape.features = embed_batch(net.spec(), inputs);
  tape.pre_activations.resize(layers.size());
  tape.activations.resize(layers.size());
  tape.activations[0] = tape.features;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    tape.pre_activations[l].noalias() = layers[l].weight * tape.activations[l];
    tape.pre_activations[l].colwise() += layers[l].bias;
    if (l + 1 < layers.size()) {
      tape.activations[l + 1] = tape.pre_activations[l];
      apply_activation(act, tape.activations[l + 1]);
    }
  }
  return tape.pre_activations.back();
}

Matrix backward_batch(const Net& net, const Matrix& inputs, const BatchTape& tape, const Matrix& cotangents,
                      bool want_input_grad, GradBundle& accum) {
  if (static_cast<std::size_t>(cotangents.rows()) != net.spec().output_dim || cotangents.cols() != inputs.cols()) {
    throw ShapeError("batched cotangent shape does not match the net output");
  }
  const auto act = net.spec().activation;
  const auto& layers = net.layers();
  Matrix delta = cotangents;
  for (std::size_t l = layers.size(); l-- > 0;) {
    accum.param_grads[l].weight.noalias() += delta * tape.activations[l].transpose();
    accum.param_grads[l].bias += delta.rowwise().sum();
    if (l == 0 && !want_input_grad) break;
    Matrix back = layers[l].weight.transpose() * delta;
    if (l > 0) scale_by_derivative(act, tape.pre_activations[l - 1], back);
    delta = std::move(back);
  }
  if (!want_input_grad) return {};
  if (net.spec().time_embedding.kind != TimeEmbedding::Kind::sinusoidal) return delta;
  Matrix out(inputs.rows(), inputs.cols());
  for (Eigen::Index c = 0; c < inputs.cols(); ++c) {
    out.col(c) = embed_backward(net.spec(), inputs.col(c), delta.col(c));
  }
  return out;
}

OptState OptState::for_net(const Net& net, double lr) {
  OptState s;
  s.first_moment = GradBundle::zeros_like(net).param_grads;
  s.second_moment = s.first_moment;
  s.lr = lr;
  return s;
}

void opt_step(OptState& opt, Net& net, const GradBundle& grads) {
  auto& layers = net.layers();
  if (grads.param_grads.size() != layers.size() || opt.first_moment.size() != layers.size()) {
    throw ShapeError("optimizer state, gradients and net disagree in depth");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& g = grads.param_grads[l];
    if (g.weight.rows() != layers[l].weight.rows() || g.weight.cols() != layers[l].weight.cols() ||
        g.bias.size() != layers[l].bias.size()) {
      throw ShapeError("gradient shape mismatch at layer " + std::to_string(l));
    }
    if (!g.weight.allFinite() || !g.bias.allFinite()) {
      throw NumericalError("non-finite gradient in layer " + std::to_string(l), l);
    }
  }
  opt.step_count += 1;
  const double t = static_cast<double>(opt.step_count);
  const double c1 = 1.0 - std::pow(opt.beta1, t);
  const double c2 = 1.0 - std::pow(opt.beta2, t);
  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = opt.beta1 * m + (1.0 - opt.beta1) * g;
    v = opt.beta2 * v + (1.0 - opt.beta2) * g.cwiseProduct(g);
    param.array() -= opt.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + opt.eps);
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    update(layers[l].weight, opt.first_moment[l].weight, opt.second_moment[l].weight, grads.param_grads[l].weight);
    update(layers[l].bias, opt.first_moment[l].bias, opt.second_moment[l].bias, grads.param_grads[l].bias);
  }
}

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::identity:
      return "identity";
    case Activation::tanh:
      return "tanh";
    case Activation::silu:
      return "silu";
  }
  return "tanh";
}

Activation activation_from_name(const std::string& name) {
  if (name == "identity") return Activation::identity;
  if (name == "tanh") return Activation::tanh;
  if (name == "silu") return Activation::silu;
  throw ConfigError("unknown activation '" + name + "'");
}

}  // namespace vbridge
