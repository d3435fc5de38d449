// vbridge - variational bridge models for time-coarsened stochastic dynamics
// Copyright 2026 The vbridge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vbridge/nn.hpp"
#include "vbridge/oracle.hpp"
#include "vbridge/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace vbridge {

// File formats. Every writer goes through write_text_atomic (temp file in
// the target directory, then rename). Readers throw DataError naming the
// path and line on malformed input.

std::string read_text_file(const std::filesystem::path& path);
void write_text_atomic(const std::filesystem::path& path, const std::string& contents);

/// Headed CSV of numbers: every row has one value per header cell.
struct NumericCsv {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
NumericCsv read_numeric_csv(const std::filesystem::path& path);

/// Header `step,x_0,...,x_{D-1}`, one row per frame, 17 significant digits.
std::string trajectory_to_csv(const Trajectory& traj);
Trajectory trajectory_from_csv(const std::string& text, const std::string& origin = "<memory>");
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);
Trajectory read_trajectory_csv(const std::filesystem::path& path);

/// Header `x_t_0,...,x_t_{D-1},x_tau_0,...,x_tau_{D-1}`.
void write_pairs_csv(const std::filesystem::path& path, const PairDataset& pairs);
PairDataset read_pairs_csv(const std::filesystem::path& path, std::size_t tau_frames);

/// {spec, layers: [{weight: [row-major], bias: [...]}]}; bit-exact round trip.
std::string net_to_json_text(const Net& net);
Net net_from_json_text(const std::string& text);

/// Path of the metadata sidecar for an artifact: `<path>.meta.json`.
std::filesystem::path sidecar_path(const std::filesystem::path& artifact);

}  // namespace vbridge
