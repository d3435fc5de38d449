// vbridge - variational bridge models for time-coarsened stochastic dynamics
// Copyright 2026 The vbridge Authors
// SPDX-License-Identifier: Apache-2.0

#include "test_util.hpp"
#include "vbridge/errors.hpp"
#include "vbridge/nn.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace vbridge;
using vbridge::test::rel_err;

namespace {

const NetSpec kSmall{2, {8}, 2, Activation::tanh, {}};

// Straight-line evaluation, independent of the library's forward pass.
Vector hand_forward(const Net& net, const Vector& x) {
  Vector h = x;
  const auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Vector z(layers[l].weight.rows());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      double acc = layers[l].bias[i];
      for (Eigen::Index j = 0; j < h.size(); ++j) acc += layers[l].weight(i, j) * h[j];
      z[i] = acc;
    }
    if (l + 1 < layers.size()) {
      for (Eigen::Index i = 0; i < z.size(); ++i) {
        switch (net.spec().activation) {
          case Activation::identity: break;
          case Activation::tanh: z[i] = std::tanh(z[i]); break;
          case Activation::silu: z[i] = z[i] / (1.0 + std::exp(-z[i])); break;
        }
      }
    }
    h = z;
  }
  return h;
}

Net linear_net(const Matrix& w, const Vector& b) {
  const auto d = static_cast<std::size_t>(w.cols());
  NetSpec spec{d, {d}, static_cast<std::size_t>(w.rows()), Activation::identity, {}};
  return Net(spec, {{Matrix::Identity(w.cols(), w.cols()), Vector::Zero(w.cols())}, {w, b}});
}

}  // namespace

TEST_SUITE("nn") {

TEST_CASE("init is deterministic and seed sensitive") {
  const Net a = init_net(kSmall, 0), b = init_net(kSmall, 0), c = init_net(kSmall, 1);
  CHECK(a == b);
  CHECK(a.flat_parameters() == b.flat_parameters());
  CHECK_FALSE(a == c);
}

TEST_CASE("init uses zero biases and fan-in scaled uniform weights") {
  const NetSpec spec{3, {16, 5}, 4, Activation::silu, {}};
  const Net net = init_net(spec, 7);
  for (const Layer& l : net.layers()) {
    CHECK(l.bias.isZero(0.0));
    const double bound = std::sqrt(1.0 / static_cast<double>(l.weight.cols()));
    CHECK(l.weight.cwiseAbs().maxCoeff() <= bound);
  }
}

TEST_CASE("invalid specs are rejected") {
  CHECK_THROWS_AS(init_net({0, {4}, 1, Activation::tanh, {}}, 0), ConfigError);
  CHECK_THROWS_AS(init_net({2, {}, 1, Activation::tanh, {}}, 0), ConfigError);
  CHECK_THROWS_AS(init_net({2, {4, 0}, 1, Activation::tanh, {}}, 0), ConfigError);
  CHECK_THROWS_AS(init_net({2, {4}, 0, Activation::tanh, {}}, 0), ConfigError);
  CHECK_THROWS_AS(init_net({2, {4}, 1, Activation::tanh, {TimeEmbedding::Kind::sinusoidal, 0}}, 0), ConfigError);
}

TEST_CASE("mismatched layer shapes are a shape error") {
  std::vector<Layer> layers{{Matrix::Zero(8, 3), Vector::Zero(8)}, {Matrix::Zero(2, 8), Vector::Zero(2)}};
  CHECK_THROWS_AS(Net(kSmall, layers), ShapeError);
}

TEST_CASE("zero weights give the final bias") {
  Net net = init_net({3, {5, 4}, 2, Activation::silu, {}}, 1);
  for (Layer& l : net.layers()) l.weight.setZero();
  net.layers().back().bias << 0.25, -1.5;
  const Vector out = forward(net, Vector::Constant(3, 2.0));
  CHECK(out[0] == 0.25);
  CHECK(out[1] == -1.5);
}

TEST_CASE("linear layer evaluates Wx + b") {
  const Matrix w = (Matrix(2, 2) << 1.0, 2.0, 3.0, 4.0).finished();
  const Vector b = (Vector(2) << 0.5, -0.5).finished();
  const Vector out = forward(linear_net(w, b), (Vector(2) << 1.0, 0.0).finished());
  CHECK(out[0] == 1.5);
  CHECK(out[1] == 2.5);
}

TEST_CASE("forward matches a hand-rolled evaluation") {
  Rng rng(3);
  for (Activation act : {Activation::tanh, Activation::silu, Activation::identity}) {
    const Net net = init_net({4, {7, 6}, 3, act, {}}, 11);
    for (int i = 0; i < 10; ++i) {
      const Vector x = rng.normal_vector(4);
      CHECK(rel_err(forward(net, x), hand_forward(net, x)) < 1e-14);
    }
  }
}

TEST_CASE("wrong input or cotangent length is a shape error") {
  const Net net = init_net(kSmall, 0);
  CHECK_THROWS_AS(forward(net, Vector::Zero(3)), ShapeError);
  CHECK_THROWS_AS(grad(net, Vector::Zero(2), Vector::Zero(3), false), ShapeError);
}

TEST_CASE("gradients match central differences") {
  Rng rng(5);
  const std::vector<NetSpec> specs{
      kSmall,
      {5, {8, 8}, 2, Activation::silu, {TimeEmbedding::Kind::scalar_append, 0}},
      {5, {6}, 2, Activation::tanh, {TimeEmbedding::Kind::sinusoidal, 3}},
  };
  for (const NetSpec& spec : specs) {
    for (int trial = 0; trial < 5; ++trial) {
      const Net net = init_net(spec, 100 + trial);
      const Vector x = rng.normal_vector(static_cast<Eigen::Index>(spec.input_dim));
      const Vector c = rng.normal_vector(static_cast<Eigen::Index>(spec.output_dim));
      const GradBundle g = grad(net, x, c, true);
      const auto value = [&](const Net& n) { return c.dot(forward(n, x)); };
      CHECK(rel_err(g.flat(), test::param_fd(net, value, 1e-5)) < 1e-4);
      const Vector in_fd = test::vector_fd(x, [&](const Vector& xx) { return c.dot(forward(net, xx)); }, 1e-5);
      REQUIRE(g.input_grad.has_value());
      CHECK(rel_err(*g.input_grad, in_fd) < 1e-4);
    }
  }
}

TEST_CASE("zero cotangent gives an all-zero bundle") {
  const Net net = init_net(kSmall, 2);
  const GradBundle g = grad(net, Vector::Ones(2), Vector::Zero(2), true);
  CHECK(g.squared_norm() == 0.0);
  CHECK(g.input_grad->isZero(0.0));
}

TEST_CASE("linear input gradient is W^T c") {
  const Matrix w = (Matrix(2, 3) << 1.0, -2.0, 0.5, 3.0, 0.0, 1.0).finished();
  const Net net = linear_net(w, Vector::Zero(2));
  const Vector c = (Vector(2) << 0.7, -1.1).finished();
  const GradBundle g = grad(net, Vector::Ones(3), c, true);
  CHECK(rel_err(*g.input_grad, w.transpose() * c) < 1e-15);
}

TEST_CASE("vjp is linear in the cotangent") {
  Rng rng(9);
  const Net net = init_net({5, {8, 8}, 2, Activation::silu, {}}, 3);
  for (int i = 0; i < 10; ++i) {
    const Vector x = rng.normal_vector(5), a = rng.normal_vector(2), b = rng.normal_vector(2);
    const Vector sum = *grad(net, x, a + b, true).input_grad;
    const Vector parts = *grad(net, x, a, true).input_grad + *grad(net, x, b, true).input_grad;
    CHECK((sum - parts).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("forward is free of side effects") {
  const Net net = init_net(kSmall, 4);
  const Net copy = net;
  const Vector x = Vector::Constant(2, 0.3);
  const Vector first = forward(net, x);
  CHECK(forward(net, x) == first);
  CHECK(net == copy);
}

TEST_CASE("batched passes agree with per-sample passes") {
  Rng rng(12);
  const Net net = init_net({5, {9, 7}, 2, Activation::silu, {TimeEmbedding::Kind::sinusoidal, 2}}, 8);
  const Matrix inputs = Matrix::NullaryExpr(5, 6, [&]() { return rng.normal(); });
  const Matrix cots = Matrix::NullaryExpr(2, 6, [&]() { return rng.normal(); });
  BatchTape tape;
  const Matrix out = forward_batch(net, inputs, tape);
  GradBundle batched = GradBundle::zeros_like(net);
  const Matrix in_grads = backward_batch(net, inputs, tape, cots, true, batched);
  GradBundle summed = GradBundle::zeros_like(net);
  for (Eigen::Index c = 0; c < inputs.cols(); ++c) {
    CHECK(rel_err(out.col(c), forward(net, inputs.col(c))) < 1e-14);
    GradBundle g = grad(net, inputs.col(c), cots.col(c), true);
    CHECK(rel_err(in_grads.col(c), *g.input_grad) < 1e-12);
    g.input_grad.reset();
    summed += g;
  }
  CHECK(rel_err(batched.flat(), summed.flat()) < 1e-12);
}

TEST_CASE("flat parameters round trip") {
  Net net = init_net({3, {4}, 2, Activation::tanh, {}}, 1);
  Vector p = net.flat_parameters();
  CHECK(p.size() == static_cast<Eigen::Index>(net.parameter_count()));
  CHECK(p.size() == 3 * 4 + 4 + 4 * 2 + 2);
  p[0] = 42.0;
  net.set_flat_parameters(p);
  CHECK(net.layers()[0].weight(0, 0) == 42.0);
  CHECK_THROWS_AS(net.set_flat_parameters(Vector::Zero(3)), ShapeError);
}

TEST_CASE("zero gradient leaves parameters but counts the step") {
  Net net = init_net(kSmall, 0);
  const Vector before = net.flat_parameters();
  OptState opt = OptState::for_net(net, 1e-3);
  opt_step(opt, net, GradBundle::zeros_like(net));
  CHECK(opt.step_count == 1);
  CHECK(net.flat_parameters() == before);
}

TEST_CASE("first Adam step moves by lr / (1 + eps)") {
  Net net = linear_net(Matrix::Zero(1, 1), Vector::Zero(1));
  OptState opt = OptState::for_net(net, 1e-3);
  GradBundle g = GradBundle::zeros_like(net);
  g.param_grads[1].weight(0, 0) = 1.0;
  opt_step(opt, net, g);
  CHECK(net.layers()[1].weight(0, 0) == doctest::Approx(-1e-3 / (1.0 + 1e-8)).epsilon(1e-12));
  CHECK(net.layers()[1].weight(0, 0) == doctest::Approx(-9.9999999e-4).epsilon(1e-9));
  CHECK(net.layers()[1].bias[0] == 0.0);
}

TEST_CASE("constant positive gradient decreases the parameter monotonically") {
  Net net = linear_net(Matrix::Zero(1, 1), Vector::Zero(1));
  OptState opt = OptState::for_net(net, 1e-2);
  GradBundle g = GradBundle::zeros_like(net);
  g.param_grads[1].bias[0] = 0.3;
  double prev = net.layers()[1].bias[0];
  for (int i = 0; i < 50; ++i) {
    opt_step(opt, net, g);
    CHECK(net.layers()[1].bias[0] < prev);
    prev = net.layers()[1].bias[0];
  }
}

TEST_CASE("non-finite gradient names the layer and changes nothing") {
  Net net = init_net({2, {4, 4}, 2, Activation::tanh, {}}, 0);
  const Net before = net;
  OptState opt = OptState::for_net(net, 1e-3);
  GradBundle g = GradBundle::zeros_like(net);
  g.param_grads[1].bias[2] = std::numeric_limits<double>::quiet_NaN();
  try {
    opt_step(opt, net, g);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    REQUIRE(e.index().has_value());
    CHECK(*e.index() == 1);
  }
  CHECK(net == before);
  CHECK(opt.step_count == 0);
}

TEST_CASE("activation names round trip") {
  for (Activation a : {Activation::identity, Activation::tanh, Activation::silu}) {
    CHECK(activation_from_name(activation_name(a)) == a);
  }
  CHECK_THROWS_AS(activation_from_name("relu6"), ConfigError);
}

}  // TEST_SUITE
