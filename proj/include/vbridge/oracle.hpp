// vbridge - variational bridge models for time-coarsened stochastic dynamics
// Copyright 2026 The vbridge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vbridge/types.hpp"

#include <array>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace vbridge {

// Ground-truth dynamics: overdamped Langevin on analytic potentials.

enum class PotentialKind { double_well, mueller_brown_like, harmonic };

/// Analytic potential energy surface.
///  - double_well: U = a (x_0^2 - 1)^2 + (b/2) sum_{i>0} x_i^2, params {a, b}
///  - harmonic:    U = (k/2) |x|^2, params {k}
///  - mueller_brown_like: scaled Mueller-Brown surface (D = 2), params {scale}
struct Potential {
  PotentialKind kind = PotentialKind::double_well;
  std::vector<double> params{1.0, 1.0};

  static Potential double_well(double a = 1.0, double b = 1.0) { return {PotentialKind::double_well, {a, b}}; }
  static Potential harmonic(double k = 1.0) { return {PotentialKind::harmonic, {k}}; }
  static Potential mueller_brown_like(double scale = 0.05) { return {PotentialKind::mueller_brown_like, {scale}}; }

  void validate() const;
  bool operator==(const Potential&) const = default;
};

std::string potential_name(PotentialKind kind);
PotentialKind potential_from_name(const std::string& name);

struct EnergyGrad {
  double energy = 0.0;
  Vector grad;
};

EnergyGrad energy_grad(const Potential& pot, const State& x);

struct OracleConfig {
  double dt = 1e-3;
  /// k_B T in energy units.
  double temperature = 0.3;
  std::size_t n_steps = 1'000'000;
  std::size_t save_every = 100;
  /// Lag between paired frames, in saved frames.
  std::size_t tau_frames = 10;
  /// Integration aborts once |x|_inf exceeds this.
  double domain_bound = 50.0;

  void validate() const;
  bool operator==(const OracleConfig&) const = default;
};

/// x <- x - grad U dt + sqrt(2 T dt) eps. Returns x_init followed by every
/// save_every-th state. Throws NumericalError with the step index when the
/// state leaves the domain box or becomes non-finite.
Trajectory langevin_simulate(const Potential& pot, const State& x_init, const OracleConfig& cfg, Seed seed);

struct PairDataset {
  std::vector<std::pair<State, State>> pairs;
  std::size_t tau_frames = 1;
};

/// All (frame_i, frame_{i+tau}) pairs in order. With max_pairs > 0 and fewer
/// than the available pairs, a subset is drawn without replacement (kept in
/// trajectory order). Throws ConfigError when the trajectory is too short.
PairDataset build_pairs(const Trajectory& traj, std::size_t tau_frames, std::size_t max_pairs = 0, Seed seed = 0);

/// Basin of a state: 0 for x_0 < 0, 1 otherwise.
inline int basin_of(const State& x) { return x[0] < 0.0 ? 0 : 1; }

struct ReferenceStatistics {
  std::array<double, 2> basin_occupancy{0.0, 0.0};
  double mean_energy = 0.0;
  /// E[x_{t+tau} | basin of x_t]; zero vector when a basin is never visited.
  std::array<Vector, 2> conditional_mean;
  std::array<std::size_t, 2> conditional_count{0, 0};
};

ReferenceStatistics reference_statistics(const Trajectory& traj, const Potential& pot, std::size_t tau_frames);

}  // namespace vbridge
