// vbridge - variational bridge models for time-coarsened stochastic dynamics
// Copyright 2026 The vbridge Authors
// SPDX-License-Identifier: Apache-2.0

#include "vbridge/oracle.hpp"

#include "vbridge/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vbridge {

namespace {

// Mueller-Brown coefficients.
constexpr std::array<double, 4> kMbA{-200.0, -100.0, -170.0, 15.0};
constexpr std::array<double, 4> kMba{-1.0, -1.0, -6.5, 0.7};
constexpr std::array<double, 4> kMbb{0.0, 0.0, 11.0, 0.6};
constexpr std::array<double, 4> kMbc{-10.0, -10.0, -6.5, 0.7};
constexpr std::array<double, 4> kMbx{1.0, 0.0, -0.5, -1.0};
constexpr std::array<double, 4> kMby{0.0, 0.5, 1.5, 1.0};

}  // namespace

void Potential::validate() const {
  const std::size_t need = kind == PotentialKind::double_well ? 2 : 1;
  if (params.size() != need) {
    throw ConfigError("potential '" + potential_name(kind) + "' expects " + std::to_string(need) + " params");
  }
  for (double p : params) {
    if (!std::isfinite(p)) throw ConfigError("potential params must be finite");
  }
}

std::string potential_name(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::double_well:
      return "double_well";
    case PotentialKind::mueller_brown_like:
      return "mueller_brown_like";
    case PotentialKind::harmonic:
      return "harmonic";
  }
  return "double_well";
}

PotentialKind potential_from_name(const std::string& name) {
  if (name == "double_well") return PotentialKind::double_well;
  if (name == "mueller_brown_like") return PotentialKind::mueller_brown_like;
  if (name == "harmonic") return PotentialKind::harmonic;
  throw ConfigError("unknown potential '" + name + "'");
}

EnergyGrad energy_grad(const Potential& pot, const State& x) {
  EnergyGrad out;
  out.grad = Vector::Zero(x.size());
  switch (pot.kind) {
    case PotentialKind::double_well: {
      const double a = pot.params[0];
      const double b = pot.params[1];
      const double q = x[0] * x[0] - 1.0;
      out.energy = a * q * q;
      out.grad[0] = 4.0 * a * x[0] * q;
      for (Eigen::Index i = 1; i < x.size(); ++i) {
        out.energy += 0.5 * b * x[i] * x[i];
        out.grad[i] = b * x[i];
      }
      break;
    }
    case PotentialKind::harmonic: {
      const double k = pot.params[0];
      out.energy = 0.5 * k * x.squaredNorm();
      out.grad = k * x;
      break;
    }
    case PotentialKind::mueller_brown_like: {
      if (x.size() != 2) throw ShapeError("mueller_brown_like potential is two-dimensional");
      const double s = pot.params[0];
      for (std::size_t j = 0; j < 4; ++j) {
        const double dx = x[0] - kMbx[j];
        const double dy = x[1] - kMby[j];
        const double e = kMbA[j] * std::exp(kMba[j] * dx * dx + kMbb[j] * dx * dy + kMbc[j] * dy * dy);
        out.energy += s * e;
        out.grad[0] += s * e * (2.0 * kMba[j] * dx + kMbb[j] * dy);
        out.grad[1] += s * e * (kMbb[j] * dx + 2.0 * kMbc[j] * dy);
      }
      break;
    }
  }
  return out;
}

void OracleConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError("oracle.dt must be > 0");
  if (!(temperature >= 0.0)) throw ConfigError("oracle.temperature must be >= 0");
  if (save_every == 0) throw ConfigError("oracle.save_every must be >= 1");
  if (tau_frames == 0) throw ConfigError("oracle.tau_frames must be >= 1");
  if (!(domain_bound > 0.0)) throw ConfigError("oracle.domain_bound must be > 0");
}

Trajectory langevin_simulate(const Potential& pot, const State& x_init, const OracleConfig& cfg, Seed seed) {
  cfg.validate();
  Rng rng(seed);
  const double noise = std::sqrt(2.0 * cfg.temperature * cfg.dt);
  Trajectory traj;
  traj.reserve(cfg.n_steps / cfg.save_every + 1);
  traj.push_back(x_init);
  State x = x_init;
  for (std::size_t n = 1; n <= cfg.n_steps; ++n) {
    x -= energy_grad(pot, x).grad * cfg.dt;
    if (noise > 0.0) {
      for (Eigen::Index i = 0; i < x.size(); ++i) x[i] += noise * rng.normal();
    }
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > cfg.domain_bound) {
      throw NumericalError("Langevin integration left the domain at step " + std::to_string(n), n);
    }
    if (n % cfg.save_every == 0) traj.push_back(x);
  }
  return traj;
}

PairDataset build_pairs(const Trajectory& traj, std::size_t tau_frames, std::size_t max_pairs, Seed seed) {
  if (tau_frames == 0) throw ConfigError("tau_frames must be >= 1");
  if (traj.size() <= tau_frames) {
    throw ConfigError("trajectory of " + std::to_string(traj.size()) + " frames is too short for lag " +
                      std::to_string(tau_frames));
  }
  const std::size_t available = traj.size() - tau_frames;
  std::vector<std::size_t> idx(available);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (max_pairs > 0 && max_pairs < available) {
    Rng rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng.engine());
    idx.resize(max_pairs);
    std::sort(idx.begin(), idx.end());
  }
  PairDataset out;
  out.tau_frames = tau_frames;
  out.pairs.reserve(idx.size());
  for (std::size_t i : idx) out.pairs.emplace_back(traj[i], traj[i + tau_frames]);
  return out;
}

ReferenceStatistics reference_statistics(const Trajectory& traj, const Potential& pot, std::size_t tau_frames) {
  if (traj.empty()) throw DomainError("reference statistics need a non-empty trajectory");
  ReferenceStatistics st;
  const Eigen::Index d = traj.front().size();
  st.conditional_mean = {Vector::Zero(d), Vector::Zero(d)};
  std::array<std::size_t, 2> counts{0, 0};
  double energy = 0.0;
  for (const auto& x : traj) {
    counts[static_cast<std::size_t>(basin_of(x))] += 1;
    energy += energy_grad(pot, x).energy;
  }
  const double n = static_cast<double>(traj.size());
  st.basin_occupancy = {static_cast<double>(counts[0]) / n, static_cast<double>(counts[1]) / n};
  st.mean_energy = energy / n;
  if (tau_frames > 0 && traj.size() > tau_frames) {
    for (std::size_t i = 0; i + tau_frames < traj.size(); ++i) {
      const auto b = static_cast<std::size_t>(basin_of(traj[i]));
      st.conditional_mean[b] += traj[i + tau_frames];
      st.conditional_count[b] += 1;
    }
    for (std::size_t b = 0; b < 2; ++b) {
      if (st.conditional_count[b] > 0) st.conditional_mean[b] /= static_cast<double>(st.conditional_count[b]);
    }
  }
  return st;
}

}  // namespace vbridge
