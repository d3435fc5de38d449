// vbridge - variational bridge models for time-coarsened stochastic dynamics
// Copyright 2026 The vbridge Authors
// SPDX-License-Identifier: Apache-2.0

#include "test_util.hpp"
#include "vbridge/errors.hpp"
#include "vbridge/soc.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

using namespace vbridge;
using vbridge::test::rel_err;

namespace {

const NetSpec kEncoder{2, {8}, 2, Activation::tanh, {}};
const NetSpec kDecoder{5, {8, 8}, 2, Activation::silu, {TimeEmbedding::Kind::scalar_append, 0}};

class LinearDrift final : public DriftField {
 public:
  explicit LinearDrift(Matrix a) : a_(std::move(a)) {}
  Vector eval(double, const State&, const State& yt) const override { return a_ * yt; }
  Vector vjp_state(double, const State&, const State&, const Vector& c) const override {
    return a_.transpose() * c;
  }

 private:
  Matrix a_;
};

class ConstantDrift final : public DriftField {
 public:
  explicit ConstantDrift(Vector c) : c_(std::move(c)) {}
  Vector eval(double, const State&, const State&) const override { return c_; }
  Vector vjp_state(double, const State&, const State& yt, const Vector&) const override {
    return Vector::Zero(yt.size());
  }

 private:
  Vector c_;
};

// Jacobian blows up on one grid time only.
class SpikeDrift final : public DriftField {
 public:
  Vector eval(double, const State&, const State& yt) const override { return Vector::Zero(yt.size()); }
  Vector vjp_state(double t, const State&, const State& yt, const Vector&) const override {
    const bool spike = std::abs(t - 0.5) < 1e-9;
    return Vector::Constant(yt.size(), spike ? std::numeric_limits<double>::infinity() : 0.0);
  }
};

// Truncated Taylor series; fine for the small norms used here.
Matrix expm(const Matrix& m) {
  Matrix out = Matrix::Identity(m.rows(), m.cols());
  Matrix term = out;
  for (int k = 1; k < 40; ++k) {
    term = term * m / static_cast<double>(k);
    out += term;
  }
  return out;
}

DiffusionPath random_path(std::size_t steps, Seed seed) {
  return simulate_sde(ConstantDrift(Vector::Zero(2)), Rng(seed).normal_vector(2), 0.5, steps, seed);
}

}  // namespace

TEST_SUITE("soc") {

TEST_CASE("reward at the target is zero with zero gradient") {
  const State x = (State(2) << 0.3, -0.1).finished();
  const Reward r = reward_and_grad(x, {x});
  CHECK(r.value == 0.0);
  CHECK(r.grad.isZero(0.0));
}

TEST_CASE("reward at a 3-4-5 offset") {
  const Reward r = reward_and_grad((State(2) << 3.0, 4.0).finished(), {State::Zero(2)});
  CHECK(r.value == doctest::Approx(-5.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(r.grad[0] == doctest::Approx(-0.6 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(r.grad[1] == doctest::Approx(-0.8 / std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("reward gradient has norm 1/sqrt(D) and matches differences") {
  Rng rng(1);
  for (int d : {1, 2, 5}) {
    for (int i = 0; i < 20; ++i) {
      const RewardSpec spec{rng.normal_vector(d)};
      const State x = rng.normal_vector(d);
      const Reward r = reward_and_grad(x, spec);
      CHECK(r.grad.norm() == doctest::Approx(1.0 / std::sqrt(double(d))).epsilon(1e-12));
      const Vector fd = test::vector_fd(x, [&](const Vector& v) { return reward_and_grad(v, spec).value; });
      CHECK(rel_err(r.grad, fd) < 1e-7);
    }
  }
  CHECK_THROWS_AS(reward_and_grad(State::Zero(2), {State::Zero(3)}), ShapeError);
}

TEST_CASE("zero-jacobian drift keeps the adjoint constant") {
  const DiffusionPath path = random_path(10, 2);
  const Vector terminal = (Vector(2) << 0.7, -1.3).finished();
  const LeanAdjoint adj = solve_lean_adjoint(ConstantDrift(Vector::Ones(2)), path, terminal);
  REQUIRE(adj.values.size() == 11);
  for (const Vector& a : adj.values) CHECK(a == terminal);
  CHECK(adj.terminal == terminal);
}

TEST_CASE("linear drift adjoint converges to the matrix exponential") {
  Rng rng(3);
  Matrix a(2, 2);
  for (int i = 0; i < 4; ++i) a(i / 2, i % 2) = rng.uniform(-1.0, 1.0);
  a /= std::max(1.0, a.operatorNorm());
  const Vector terminal = rng.normal_vector(2);
  const LinearDrift drift(a);
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t steps : {16, 64, 256}) {
    const DiffusionPath path = random_path(steps, 4);
    const LeanAdjoint adj = solve_lean_adjoint(drift, path, terminal);
    double worst = 0.0;
    for (std::size_t k = 0; k <= steps; ++k) {
      const Vector want = expm(a.transpose() * (1.0 - path.grid[k])) * terminal;
      worst = std::max(worst, rel_err(adj.values[k], want));
    }
    CHECK(worst < prev);
    prev = worst;
  }
  CHECK(prev < 1e-2);
}

TEST_CASE("doubling beta halves every adjoint value") {
  const Net net = init_net(kDecoder, 5);
  const DiffusionPath path = simulate_sde(net, State::Ones(2), BridgeConfig{}, 6);
  const RewardSpec spec{(State(2) << 1.0, 0.0).finished()};
  const LeanAdjoint a1 = solve_lean_adjoint(net, path, spec, 0.25);
  const LeanAdjoint a2 = solve_lean_adjoint(net, path, spec, 0.5);
  for (std::size_t k = 0; k < a1.values.size(); ++k) CHECK(a2.values[k] == 0.5 * a1.values[k]);
}

TEST_CASE("adjoint scales exactly with the terminal value") {
  const Net net = init_net(kDecoder, 7);
  const NetDrift drift(net);
  const DiffusionPath path = simulate_sde(net, State::Ones(2), BridgeConfig{}, 8);
  const Vector terminal = (Vector(2) << 0.3, 0.9).finished();
  const LeanAdjoint a1 = solve_lean_adjoint(drift, path, terminal);
  const LeanAdjoint a2 = solve_lean_adjoint(drift, path, Vector(2.0 * terminal));
  for (std::size_t k = 0; k < a1.values.size(); ++k) CHECK(a2.values[k] == 2.0 * a1.values[k]);
}

TEST_CASE("adjoint errors") {
  const DiffusionPath path = random_path(10, 9);
  const RewardSpec spec{State::Zero(2)};
  CHECK_THROWS_AS(solve_lean_adjoint(ConstantDrift(Vector::Zero(2)), path, spec, 0.0), DomainError);
  CHECK_THROWS_AS(solve_lean_adjoint(ConstantDrift(Vector::Zero(2)), path, spec, -1.0), DomainError);
  CHECK_THROWS_AS(solve_lean_adjoint(ConstantDrift(Vector::Zero(2)), path, Vector::Ones(3)), ShapeError);
  try {
    solve_lean_adjoint(SpikeDrift(), path, Vector::Ones(2));
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    REQUIRE(e.index().has_value());
    CHECK(*e.index() == 4);
  }
}

TEST_CASE("adjoint loss vanishes at its fixed points") {
  const Net net = init_net(kDecoder, 10);
  const NetDrift drift(net);
  const DiffusionPath path = simulate_sde(net, State::Ones(2), BridgeConfig{}, 11);
  LeanAdjoint zero;
  zero.values.assign(path.states.size(), Vector::Zero(2));
  zero.terminal = Vector::Zero(2);
  for (std::size_t k = 0; k < path.steps(); ++k) {
    const AdjointLoss l = adjoint_loss_step(net, drift, path, zero, k, 0.2);
    CHECK(l.loss == 0.0);
    CHECK(l.grads.squared_norm() == 0.0);
  }

  // Zero controlled drift against base = sigma^2 * a with a constant.
  Net zero_net = init_net(kDecoder, 0);
  for (Layer& l : zero_net.layers()) {
    l.weight.setZero();
    l.bias.setZero();
  }
  const double sigma = 0.3;
  const Vector a = (Vector(2) << 0.5, -2.0).finished();
  const ConstantDrift base(sigma * sigma * a);
  const LeanAdjoint adj = solve_lean_adjoint(base, path, a);
  for (std::size_t k = 0; k < path.steps(); ++k) CHECK(adjoint_loss_step(zero_net, base, path, adj, k, sigma).loss < 1e-30);
}

TEST_CASE("adjoint loss gradient matches central differences") {
  const Net frozen = init_net(kDecoder, 12);
  const Net net_u = init_net(kDecoder, 13);
  const NetDrift base(frozen);
  const DiffusionPath path = simulate_sde(net_u, State::Ones(2), BridgeConfig{}, 14);
  const LeanAdjoint adj = solve_lean_adjoint(base, path, {(State(2) << 1.0, 0.0).finished()}, 0.5);
  for (std::size_t k : {0, 4, 9}) {
    const AdjointLoss l = adjoint_loss_step(net_u, base, path, adj, k, 0.2);
    const Vector fd = test::param_fd(net_u, [&](const Net& n) { return adjoint_loss_step(n, base, path, adj, k, 0.2).loss; });
    CHECK(rel_err(l.grads.flat(), fd) <= 1e-3);
  }
}

TEST_CASE("adjoint loss argument checks") {
  const Net net = init_net(kDecoder, 15);
  const DiffusionPath path = simulate_sde(net, State::Ones(2), BridgeConfig{}, 16);
  const LeanAdjoint adj = solve_lean_adjoint(NetDrift(net), path, Vector::Ones(2));
  CHECK_THROWS_AS(adjoint_loss_step(net, net, path, adj, 10, 0.2), DomainError);
  const Net wide = init_net({7, {8}, 3, Activation::silu, {TimeEmbedding::Kind::scalar_append, 0}}, 1);
  CHECK_THROWS_AS(adjoint_loss_step(wide, NetDrift(net), path, adj, 0, 0.2), ShapeError);
  LeanAdjoint short_adj = adj;
  short_adj.values.pop_back();
  CHECK_THROWS_AS(adjoint_loss_step(net, net, path, short_adj, 0, 0.2), ShapeError);
}

TEST_CASE("control is the scaled drift difference") {
  const Net d = init_net(kDecoder, 17);
  Net u = d;
  const State y0 = State::Ones(2), yt = State::Zero(2);
  CHECK(control(u, d, 0.3, y0, yt, 0.2).isZero(0.0));
  u.layers().back().bias[1] += 0.1;
  const Vector c = control(u, d, 0.3, y0, yt, 0.2);
  CHECK(std::abs(c[0]) < 1e-14);
  CHECK(c[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("augmentation without rotation or translation is the identity") {
  SocConfig cfg;
  cfg.aug_max_angle = 0.0;
  cfg.aug_translation_scale = 0.0;
  const State x = (State(2) << 0.4, 1.2).finished();
  CHECK(augment(x, State::Zero(2), cfg, 1) == x);
}

TEST_CASE("rotation about the target preserves the distance") {
  SocConfig cfg;
  cfg.aug_translation_scale = 0.0;
  Rng rng(18);
  for (int i = 0; i < 100; ++i) {
    const State x = rng.normal_vector(2), ref = rng.normal_vector(2);
    CHECK((augment(x, ref, cfg, derive_seed(19, i)) - ref).norm() == doctest::Approx((x - ref).norm()).epsilon(1e-12));
  }
}

TEST_CASE("rotation angles are uniform on the configured range") {
  SocConfig cfg;
  cfg.aug_translation_scale = 0.0;
  const std::size_t n = 10000;
  std::vector<double> u;
  for (std::size_t i = 0; i < n; ++i) {
    const double theta = augment_detailed(State::Ones(2), State::Zero(2), cfg, derive_seed(20, i)).theta;
    CHECK(std::abs(theta) <= std::numbers::pi / 3.0);
    u.push_back((theta + std::numbers::pi / 3.0) / (2.0 * std::numbers::pi / 3.0));
  }
  std::sort(u.begin(), u.end());
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d = std::max({d, std::abs(u[i] - double(i) / n), std::abs(u[i] - double(i + 1) / n)});
  }
  CHECK(test::ks_p_value(d, n) > 0.01);
}

TEST_CASE("augmentation only translates outside two dimensions") {
  const SocConfig cfg;
  const State x = (State(3) << 1.0, 2.0, 3.0).finished();
  const Augmented a = augment_detailed(x, State::Zero(3), cfg, 21);
  CHECK(a.theta == 0.0);
  CHECK((a.x - (x + a.translation)).isZero(1e-15));
  CHECK_THROWS_AS(augment(x, State::Zero(2), cfg, 0), ShapeError);
}

TEST_CASE("gaussian kl examples") {
  const Matrix i2 = Matrix::Identity(2, 2);
  CHECK(gaussian_kl(Vector::Ones(2), i2, Vector::Ones(2), i2) == doctest::Approx(0.0));
  CHECK(gaussian_kl(Vector::Ones(1), Matrix::Identity(1, 1), Vector::Zero(1), Matrix::Identity(1, 1)) ==
        doctest::Approx(0.5).epsilon(1e-14));
  const double r = 0.3;
  CHECK(gaussian_kl(Vector::Zero(1), Matrix::Constant(1, 1, r), Vector::Zero(1), Matrix::Identity(1, 1)) ==
        doctest::Approx(0.5 * (r - 1.0 - std::log(r))).epsilon(1e-14));
  CHECK_THROWS_AS(gaussian_kl(Vector::Zero(2), i2, Vector::Zero(1), Matrix::Identity(1, 1)), ShapeError);
  CHECK_THROWS_AS(gaussian_kl(Vector::Zero(2), -i2, Vector::Zero(2), i2), NumericalError);
}

TEST_CASE("constant control costs half its squared norm") {
  const Vector u = (Vector(2) << 0.7, -1.1).finished();
  const double sigma = 0.4;
  const DiffusionPath path = random_path(20, 22);
  const double kl = discrete_path_kl(ConstantDrift(sigma * u), ConstantDrift(Vector::Zero(2)), path, sigma);
  CHECK(std::abs(kl - 0.5 * u.squaredNorm()) <= 1e-10);
}

TEST_CASE("huge beta leaves the drift essentially unchanged") {
  const Net e = init_net(kEncoder, 23), d = init_net(kDecoder, 24);
  SocConfig soc;
  soc.beta = 1e12;
  soc.iterations = 100;
  const RlResult res = rl_finetune(e, d, {{State::Zero(2), State::Ones(2)}}, soc, BridgeConfig{}, 25);
  CHECK((res.net_u.flat_parameters() - d.flat_parameters()).cwiseAbs().maxCoeff() < 1e-3);
  CHECK(res.log.size() == 100);
}

TEST_CASE("rl finetuning is deterministic and never touches the frozen nets") {
  const Net e = init_net(kEncoder, 26), d = init_net(kDecoder, 27);
  const Net e_copy = e, d_copy = d;
  SocConfig soc;
  soc.iterations = 20;
  soc.lr_rl = 1e-3;
  const std::vector<RlTarget> data{{State::Zero(2), State::Ones(2)}, {State::Ones(2), State::Zero(2)}};
  std::size_t calls = 0;
  const RlResult a = rl_finetune(e, d, data, soc, BridgeConfig{}, 28, [&](const RlLogRecord& r) {
    CHECK(r.iter == ++calls);
    CHECK(!r.error);
    CHECK(r.reward_mean <= 0.0);
  });
  const RlResult b = rl_finetune(e, d, data, soc, BridgeConfig{}, 28);
  CHECK(calls == 20);
  CHECK(a.net_u == b.net_u);
  CHECK(!(a.net_u == d));
  CHECK(e == e_copy);
  CHECK(d == d_copy);
}

TEST_CASE("rl finetuning aborts after the failure budget") {
  const Net e = init_net(kEncoder, 29);
  Net d = init_net(kDecoder, 30);
  d.layers().back().bias.setConstant(std::numeric_limits<double>::infinity());
  SocConfig soc;
  soc.failure_budget = 3;
  std::size_t failures = 0;
  try {
    rl_finetune(e, d, {{State::Zero(2), State::Ones(2)}}, soc, BridgeConfig{}, 31, [&](const RlLogRecord& r) {
      if (r.error) ++failures;
    });
    FAIL("expected NumericalError");
  } catch (const NumericalError& err) {
    REQUIRE(err.index().has_value());
    CHECK(*err.index() == 4);
  }
  CHECK(failures == 4);
}

TEST_CASE("rl finetuning needs targets") {
  const Net e = init_net(kEncoder, 1), d = init_net(kDecoder, 2);
  CHECK_THROWS_AS(rl_finetune(e, d, {}, SocConfig{}, BridgeConfig{}, 0), DataError);
}

TEST_CASE("config validation") {
  CHECK_NOTHROW(SocConfig{}.validate());
  SocConfig c;
  c.beta = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.iterations = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.aug_max_angle = 4.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

}  // TEST_SUITE
