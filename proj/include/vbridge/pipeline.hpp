// vbridge - variational bridge models for time-coarsened stochastic dynamics
// Copyright 2026 The vbridge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vbridge/analysis.hpp"
#include "vbridge/config.hpp"
#include "vbridge/nn.hpp"
#include "vbridge/soc.hpp"
#include "vbridge/training.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace vbridge {

// Workflow commands. Each writes its artifacts atomically into an output
// directory, with a `<file>.meta.json` sidecar carrying the config hash.

enum class Stage { pretrained = 1, finetuned = 2, rl = 3 };

std::string stage_name(Stage s);
Stage stage_from_name(const std::string& name);

struct Checkpoint {
  Stage stage = Stage::pretrained;
  RunConfig config;
  Net net_e;
  Net net_d;
  std::optional<Net> net_u;
  std::vector<EpochRecord> loss_history;
};

std::string checkpoint_to_json_text(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json_text(const std::string& text);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Receives one human-readable progress line at a time.
using ProgressFn = std::function<void(const std::string&)>;

struct OracleSimOutput {
  std::filesystem::path trajectory;  // every saved frame
  std::filesystem::path coarse;      // every tau_frames-th saved frame
  std::size_t frames = 0;
};

/// Langevin run from config.x_init with config.seed.
OracleSimOutput cmd_oracle_sim(const RunConfig& cfg, const std::filesystem::path& out_dir);

/// pairs.csv at lag oracle.tau_frames; max_pairs == 0 keeps all pairs.
std::filesystem::path cmd_build_pairs(const RunConfig& cfg, const std::filesystem::path& trajectory_csv,
                                      const std::filesystem::path& out_dir, std::size_t max_pairs = 0);

/// Joint training on (x, x) couplings from a trajectory CSV. Writes
/// checkpoint.json after every epoch and best.json for the best validation
/// loss. Throws ConfigError when the dataset is missing or empty.
Checkpoint cmd_pretrain(const RunConfig& cfg, const std::filesystem::path& dataset_csv,
                        const std::filesystem::path& out_dir, const ProgressFn& progress = {});

/// Continues training from a pretrained checkpoint on (x_t, x_{t+tau}) pairs
/// at lr_finetune. Throws PipelineError unless the checkpoint is pretrained.
Checkpoint cmd_finetune(const RunConfig& cfg, const std::filesystem::path& checkpoint,
                        const std::filesystem::path& pairs_csv, const std::filesystem::path& out_dir,
                        const ProgressFn& progress = {});

/// Adjoint-matching finetuning from a finetuned checkpoint. Also writes
/// rl_log.jsonl. Throws PipelineError unless the checkpoint is finetuned.
Checkpoint cmd_rl(const RunConfig& cfg, const std::filesystem::path& checkpoint, const std::vector<RlTarget>& targets,
                  const std::filesystem::path& out_dir, const ProgressFn& progress = {});

/// Reads targets with header `x0_0,...,x_ref_0,...`.
std::vector<RlTarget> read_targets_csv(const std::filesystem::path& path);

/// Rollout of n_steps from x0 written as trajectory.csv plus sidecar. Uses
/// net_u as the drift for rl checkpoints. Throws PipelineError for
/// pretrained checkpoints.
std::filesystem::path cmd_generate(const std::filesystem::path& checkpoint, const State& x0, std::size_t n_steps,
                                   Seed seed, const std::filesystem::path& out_dir);

struct EvaluationReport {
  std::vector<double> jsd_coord;
  std::vector<double> jsd_tic;
  double jsd_msm = 0.0;
  bool decorr_tic0 = false;
  bool decorr_tic0_reference = false;
  std::vector<double> basin_occupancy_generated;
  std::vector<double> basin_occupancy_reference;
  FreeEnergySurface fes_generated;
  FreeEnergySurface fes_reference;

  std::string to_json_text() const;
};

/// TICA, k-means and histograms are fitted on the reference; the generated
/// trajectory is projected and assigned with the same models. Throws
/// ShapeError on dimension mismatch, DomainError on empty input.
EvaluationReport evaluate_trajectories(const Matrix& generated, const Matrix& reference, const AnalysisConfig& cfg,
                                       Seed seed);

/// Writes metrics.json, fes_generated.csv and fes_reference.csv.
EvaluationReport cmd_evaluate(const RunConfig& cfg, const std::filesystem::path& generated_csv,
                              const std::filesystem::path& reference_csv, const std::filesystem::path& out_dir);

}  // namespace vbridge
