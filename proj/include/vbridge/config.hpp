// vbridge - variational bridge models for time-coarsened stochastic dynamics
// Copyright 2026 The vbridge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vbridge/bridge.hpp"
#include "vbridge/encoder.hpp"
#include "vbridge/nn.hpp"
#include "vbridge/oracle.hpp"
#include "vbridge/soc.hpp"
#include "vbridge/training.hpp"
#include "vbridge/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace vbridge {

struct AnalysisConfig {
  std::size_t n_bins = 50;
  std::size_t msm_states = 20;
  /// Lags are in frames of the evaluated (coarse) trajectories.
  std::size_t tica_lag = 1;
  std::size_t msm_lag = 1;
  double decorr_threshold = 0.5;
  std::size_t decorr_window = 1000;
  std::size_t fes_bins = 40;

  void validate() const;
  bool operator==(const AnalysisConfig&) const = default;
};

struct NetSpecs {
  NetSpec encoder{2, {64, 64}, 2, Activation::silu, {}};
  NetSpec decoder{5, {64, 64}, 2, Activation::silu, {TimeEmbedding::Kind::scalar_append, 0}};

  bool operator==(const NetSpecs&) const = default;
};

/// Everything a pipeline run needs. Default construction gives the reference
/// hyperparameters for a 2-D double well.
struct RunConfig {
  EncoderConfig encoder;
  BridgeConfig bridge;
  SocConfig soc;
  OracleConfig oracle;
  Potential potential = Potential::double_well();
  State x_init = (State(2) << -1.0, 0.0).finished();
  NetSpecs net_specs;
  TrainingConfig training;
  AnalysisConfig analysis;
  Seed seed = 0;

  /// State dimension implied by x_init.
  std::size_t dim() const { return static_cast<std::size_t>(x_init.size()); }

  /// Validates every section plus cross-section shape consistency.
  void validate() const;
  bool operator==(const RunConfig&) const;
};

/// Parses JSON text. Missing fields keep their defaults; unknown keys and
/// wrongly typed values throw ConfigError naming the dotted field path;
/// malformed JSON throws ConfigError with line and column.
RunConfig config_from_json_text(const std::string& text);

/// Canonical JSON with every field present.
std::string config_to_json_text(const RunConfig& cfg, int indent = 2);

RunConfig load_config(const std::filesystem::path& path);
void save_config(const RunConfig& cfg, const std::filesystem::path& path);

/// FNV-1a 64 of the canonical compact JSON, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

}  // namespace vbridge
