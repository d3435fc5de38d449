// vbridge - variational bridge models for time-coarsened stochastic dynamics
// Copyright 2026 The vbridge Authors
// SPDX-License-Identifier: Apache-2.0

#include "test_util.hpp"
#include "vbridge/errors.hpp"
#include "vbridge/io.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

using namespace vbridge;

namespace {

Trajectory awkward_trajectory() {
  Rng rng(1);
  Trajectory t;
  for (int i = 0; i < 50; ++i) t.push_back(rng.normal_vector(3) * std::pow(10.0, i % 7 - 3));
  t.push_back((State(3) << 0.1 + 0.2, -1e-300, std::numeric_limits<double>::max()).finished());
  return t;
}

std::string data_error(const std::string& text) {
  try {
    trajectory_from_csv(text, "t.csv");
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("trajectory csv round trip is bit exact") {
  const test::TempDir dir("io");
  const Trajectory t = awkward_trajectory();
  write_trajectory_csv(dir / "t.csv", t);
  CHECK(read_trajectory_csv(dir / "t.csv") == t);
  CHECK(trajectory_from_csv(trajectory_to_csv(t)) == t);
  CHECK(trajectory_to_csv(t).rfind("step,x_0,x_1,x_2\n", 0) == 0);
}

TEST_CASE("pair csv round trip is bit exact") {
  const test::TempDir dir("io");
  const Trajectory t = awkward_trajectory();
  PairDataset p;
  p.tau_frames = 3;
  for (std::size_t i = 0; i + 3 < t.size(); ++i) p.pairs.emplace_back(t[i], t[i + 3]);
  write_pairs_csv(dir / "p.csv", p);
  const PairDataset back = read_pairs_csv(dir / "p.csv", 3);
  CHECK(back.pairs == p.pairs);
  CHECK(back.tau_frames == 3);
  const NumericCsv raw = read_numeric_csv(dir / "p.csv");
  CHECK(raw.header == std::vector<std::string>{"x_t_0", "x_t_1", "x_t_2", "x_tau_0", "x_tau_1", "x_tau_2"});
}

TEST_CASE("malformed csv names the line") {
  const std::string bad_cell = data_error("step,x_0\n0,1.0\n1,abc\n");
  CHECK(bad_cell.find("t.csv:3") != std::string::npos);
  CHECK(!data_error("step,x_0\n0,1.0,2.0\n").empty());
  CHECK(!data_error("").empty());
  CHECK(!data_error("time,x_0\n0,1\n").empty());
  CHECK_THROWS_AS(read_trajectory_csv("/nonexistent/vbridge/t.csv"), DataError);
}

TEST_CASE("net json round trip is bit exact") {
  for (const NetSpec& spec : {NetSpec{2, {8}, 2, Activation::tanh, {}},
                              NetSpec{5, {7, 3}, 2, Activation::silu, {TimeEmbedding::Kind::sinusoidal, 2}},
                              NetSpec{3, {4}, 1, Activation::identity, {TimeEmbedding::Kind::scalar_append, 0}}}) {
    Net net = init_net(spec, 3);
    Vector p = net.flat_parameters();
    p[0] = 0.1 + 0.2;
    p[1] = -1e-310;
    net.set_flat_parameters(p);
    const Net back = net_from_json_text(net_to_json_text(net));
    CHECK(back == net);
    CHECK(back.spec() == spec);
  }
  CHECK_THROWS_AS(net_from_json_text("{\"spec\": 3}"), Error);
  CHECK_THROWS_AS(net_from_json_text("not json"), Error);
}

TEST_CASE("atomic writes replace the target and leave no temp files") {
  const test::TempDir dir("io");
  write_text_atomic(dir / "a.txt", "first");
  write_text_atomic(dir / "a.txt", "second");
  CHECK(read_text_file(dir / "a.txt") == "second");
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path())) ++files;
  CHECK(files == 1);
  write_text_atomic(dir / "sub" / "b.txt", "x");
  CHECK(read_text_file(dir / "sub" / "b.txt") == "x");
}

TEST_CASE("sidecar naming") {
  CHECK(sidecar_path("/a/b/model.json") == std::filesystem::path("/a/b/model.json.meta.json"));
}

}  // TEST_SUITE
