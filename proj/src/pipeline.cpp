// vbridge - variational bridge models for time-coarsened stochastic dynamics
// Copyright 2026 The vbridge Authors
// SPDX-License-Identifier: Apache-2.0

#include "vbridge/pipeline.hpp"

#include "vbridge/errors.hpp"
#include "vbridge/io.hpp"
#include "vbridge/oracle.hpp"

#include "json_detail.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace vbridge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json net_json(const Net& net) { return json::parse(net_to_json_text(net)); }

void write_sidecar(const fs::path& artifact, const RunConfig& cfg, json extra) {
  extra["config_hash"] = config_hash(cfg);
  extra["seed"] = cfg.seed;
  write_text_atomic(sidecar_path(artifact), extra.dump(2) + "\n");
}

json oracle_provenance(const RunConfig& cfg) {
  return json::parse(config_to_json_text(cfg, -1)).at("oracle");
}

void require_file(const fs::path& path, const char* what) {
  if (!fs::exists(path)) throw ConfigError(std::string(what) + " '" + path.string() + "' does not exist");
}

void require_stage(const Checkpoint& ckpt, Stage expected, const char* command) {
  if (ckpt.stage != expected) {
    throw PipelineError(std::string(command) + " needs a " + stage_name(expected) + " checkpoint, got " +
                        stage_name(ckpt.stage));
  }
}

void emit(const ProgressFn& progress, const std::string& line) {
  if (progress) progress(line);
}

std::string epoch_line(const char* phase, const EpochRecord& r) {
  char buf[200];
  std::snprintf(buf, sizeof buf, "%s epoch %zu train %.6g val %.6g val_abm %.6g lr %.3g", phase, r.epoch,
                r.train_loss, r.val_loss, r.val_abm, r.lr);
  return buf;
}

// Runs train_joint and keeps checkpoint.json / best.json current.
Checkpoint train_stage(const RunConfig& cfg, Stage stage, Net net_e, Net net_d, std::vector<EpochRecord> history,
                       const std::vector<RawCoupling>& data, double lr, Seed seed, const fs::path& out_dir,
                       const ProgressFn& progress) {
  fs::create_directories(out_dir);
  RunConfig stored = cfg;
  stored.net_specs.encoder = net_e.spec();
  stored.net_specs.decoder = net_d.spec();
  const std::size_t offset = history.size();
  const char* phase = stage == Stage::pretrained ? "pretrain" : "finetune";
  auto snapshot = [&](const Net& e, const Net& d, const std::vector<EpochRecord>& h) {
    Checkpoint c{stage, stored, e, d, std::nullopt, history};
    c.loss_history.insert(c.loss_history.end(), h.begin(), h.end());
    for (std::size_t i = offset; i < c.loss_history.size(); ++i) c.loss_history[i].epoch = i + 1;
    return c;
  };
  const TrainState state = train_joint(
      std::move(net_e), std::move(net_d), data, cfg.encoder, cfg.bridge, cfg.training, lr, seed,
      [&](const TrainState& s) {
        const Checkpoint c = snapshot(s.net_e, s.net_d, s.history);
        save_checkpoint(c, out_dir / "checkpoint.json");
        if (s.history.back().val_loss == s.best_val) save_checkpoint(c, out_dir / "best.json");
        emit(progress, epoch_line(phase, s.history.back()));
      });
  Checkpoint out = snapshot(state.net_e, state.net_d, state.history);
  write_sidecar(out_dir / "checkpoint.json", stored, {{"stage", stage_name(stage)}});
  write_sidecar(out_dir / "best.json", stored, {{"stage", stage_name(stage)}, {"best_val", state.best_val}});
  return out;
}

std::string fes_csv(const FreeEnergySurface& f) {
  std::string out = "tic0_bin,tic1_bin,F\n";
  char buf[40];
  for (std::size_t i = 0; i < f.bins; ++i) {
    for (std::size_t j = 0; j < f.bins; ++j) {
      out += std::to_string(i) + "," + std::to_string(j) + ",";
      if (const auto& v = f.at(i, j)) {
        std::snprintf(buf, sizeof buf, "%.17g", *v);
        out += buf;
      }
      out += '\n';
    }
  }
  return out;
}

std::vector<double> basin_occupancy(const Matrix& m) {
  std::vector<double> occ(2, 0.0);
  for (Eigen::Index r = 0; r < m.rows(); ++r) occ[static_cast<std::size_t>(m(r, 0) < 0.0 ? 0 : 1)] += 1.0;
  for (double& o : occ) o /= static_cast<double>(m.rows());
  return occ;
}

}  // namespace

std::string stage_name(Stage s) {
  switch (s) {
    case Stage::pretrained: return "pretrained";
    case Stage::finetuned: return "finetuned";
    case Stage::rl: return "rl";
  }
  return "unknown";
}

Stage stage_from_name(const std::string& name) {
  if (name == "pretrained") return Stage::pretrained;
  if (name == "finetuned") return Stage::finetuned;
  if (name == "rl") return Stage::rl;
  throw DataError("unknown checkpoint stage '" + name + "'");
}

std::string checkpoint_to_json_text(const Checkpoint& c) {
  json hist = json::array();
  for (const auto& r : c.loss_history) {
    hist.push_back({{"epoch", r.epoch}, {"train_loss", r.train_loss}, {"val_loss", r.val_loss},
                    {"val_abm", r.val_abm}, {"lr", r.lr}});
  }
  json j{{"stage", stage_name(c.stage)},
         {"config", json::parse(config_to_json_text(c.config, -1))},
         {"config_hash", config_hash(c.config)},
         {"net_e", net_json(c.net_e)},
         {"net_d", net_json(c.net_d)},
         {"loss_history", hist}};
  if (c.net_u) j["net_u"] = net_json(*c.net_u);
  return j.dump();
}

Checkpoint checkpoint_from_json_text(const std::string& text) {
  try {
    const json j = json::parse(text);
    std::vector<EpochRecord> hist;
    for (const auto& r : j.at("loss_history")) {
      hist.push_back({r.at("epoch").get<std::size_t>(), r.at("train_loss").get<double>(),
                      r.at("val_loss").get<double>(), r.at("val_abm").get<double>(), r.at("lr").get<double>()});
    }
    Checkpoint c{stage_from_name(j.at("stage").get<std::string>()),
                 config_from_json_text(j.at("config").dump()),
                 net_from_json_text(j.at("net_e").dump()),
                 net_from_json_text(j.at("net_d").dump()),
                 std::nullopt,
                 std::move(hist)};
    if (j.contains("net_u")) c.net_u = net_from_json_text(j.at("net_u").dump());
    if (c.stage == Stage::rl && !c.net_u) throw DataError("rl checkpoint lacks net_u");
    return c;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const fs::path& path) {
  write_text_atomic(path, checkpoint_to_json_text(ckpt));
}

Checkpoint load_checkpoint(const fs::path& path) {
  try {
    return checkpoint_from_json_text(read_text_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

OracleSimOutput cmd_oracle_sim(const RunConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  const Trajectory traj = langevin_simulate(cfg.potential, cfg.x_init, cfg.oracle, cfg.seed);
  OracleSimOutput out{out_dir / "trajectory.csv", out_dir / "coarse.csv", traj.size()};
  write_trajectory_csv(out.trajectory, traj);
  Trajectory coarse;
  for (std::size_t i = 0; i < traj.size(); i += cfg.oracle.tau_frames) coarse.push_back(traj[i]);
  write_trajectory_csv(out.coarse, coarse);
  write_sidecar(out.trajectory, cfg, {{"oracle", oracle_provenance(cfg)}, {"frames", traj.size()}});
  write_sidecar(out.coarse, cfg,
                {{"oracle", oracle_provenance(cfg)}, {"frames", coarse.size()}, {"stride", cfg.oracle.tau_frames}});
  return out;
}

fs::path cmd_build_pairs(const RunConfig& cfg, const fs::path& trajectory_csv, const fs::path& out_dir,
                         std::size_t max_pairs) {
  cfg.validate();
  require_file(trajectory_csv, "trajectory");
  const Trajectory traj = read_trajectory_csv(trajectory_csv);
  const PairDataset pairs = build_pairs(traj, cfg.oracle.tau_frames, max_pairs, derive_seed(cfg.seed, 7));
  const fs::path path = out_dir / "pairs.csv";
  write_pairs_csv(path, pairs);
  write_sidecar(path, cfg,
                {{"oracle", oracle_provenance(cfg)},
                 {"source", trajectory_csv.string()},
                 {"tau_frames", pairs.tau_frames},
                 {"pairs", pairs.pairs.size()}});
  return path;
}

Checkpoint cmd_pretrain(const RunConfig& cfg, const fs::path& dataset_csv, const fs::path& out_dir,
                        const ProgressFn& progress) {
  cfg.validate();
  require_file(dataset_csv, "pretraining dataset");
  const Trajectory frames = read_trajectory_csv(dataset_csv);
  if (frames.empty()) throw ConfigError("pretraining dataset '" + dataset_csv.string() + "' is empty");
  std::vector<RawCoupling> data;
  data.reserve(frames.size());
  for (const auto& x : frames) {
    if (x.size() != static_cast<Eigen::Index>(cfg.dim())) throw ShapeError("dataset dimension does not match config");
    data.push_back({x, x});
  }
  return train_stage(cfg, Stage::pretrained, init_net(cfg.net_specs.encoder, derive_seed(cfg.seed, 1)),
                     init_net(cfg.net_specs.decoder, derive_seed(cfg.seed, 2)), {}, data, cfg.training.lr_pretrain,
                     derive_seed(cfg.seed, 10), out_dir, progress);
}

Checkpoint cmd_finetune(const RunConfig& cfg, const fs::path& checkpoint, const fs::path& pairs_csv,
                        const fs::path& out_dir, const ProgressFn& progress) {
  cfg.validate();
  Checkpoint ckpt = load_checkpoint(checkpoint);
  require_stage(ckpt, Stage::pretrained, "finetune");
  require_file(pairs_csv, "pair dataset");
  const PairDataset pairs = read_pairs_csv(pairs_csv, cfg.oracle.tau_frames);
  if (pairs.pairs.empty()) throw ConfigError("pair dataset '" + pairs_csv.string() + "' is empty");
  std::vector<RawCoupling> data;
  data.reserve(pairs.pairs.size());
  for (const auto& [a, b] : pairs.pairs) {
    if (a.size() != static_cast<Eigen::Index>(ckpt.net_e.spec().input_dim)) {
      throw ShapeError("pair dimension does not match the checkpoint networks");
    }
    data.push_back({a, b});
  }
  return train_stage(cfg, Stage::finetuned, ckpt.net_e, ckpt.net_d, ckpt.loss_history, data,
                     cfg.training.lr_finetune, derive_seed(cfg.seed, 20), out_dir, progress);
}

std::vector<RlTarget> read_targets_csv(const fs::path& path) {
  require_file(path, "target dataset");
  const NumericCsv csv = read_numeric_csv(path);
  if (csv.header.empty() || csv.header.size() % 2 != 0 || csv.header.front() != "x0_0") {
    throw DataError(path.string() + ": target header must be `x0_0,...,x_ref_0,...`");
  }
  const auto d = static_cast<Eigen::Index>(csv.header.size() / 2);
  std::vector<RlTarget> out;
  for (const auto& r : csv.rows) {
    out.push_back({Eigen::Map<const Vector>(r.data(), d), Eigen::Map<const Vector>(r.data() + d, d)});
  }
  if (out.empty()) throw ConfigError("target dataset '" + path.string() + "' is empty");
  return out;
}

Checkpoint cmd_rl(const RunConfig& cfg, const fs::path& checkpoint, const std::vector<RlTarget>& targets,
                  const fs::path& out_dir, const ProgressFn& progress) {
  cfg.validate();
  Checkpoint ckpt = load_checkpoint(checkpoint);
  require_stage(ckpt, Stage::finetuned, "rl-finetune");
  if (targets.empty()) throw ConfigError("RL target dataset is empty");
  for (const auto& t : targets) {
    const auto d = static_cast<Eigen::Index>(ckpt.net_e.spec().input_dim);
    if (t.x0.size() != d || t.x_ref.size() != d) throw ShapeError("RL targets do not match the checkpoint dimension");
  }
  std::string log;
  const RlResult res = rl_finetune(ckpt.net_e, ckpt.net_d, targets, cfg.soc, cfg.bridge, derive_seed(cfg.seed, 30),
                                   [&](const RlLogRecord& r) {
                                     json line{{"iter", r.iter},
                                               {"reward_mean", r.reward_mean},
                                               {"adjoint_loss", r.adjoint_loss},
                                               {"grad_norm", r.grad_norm}};
                                     if (r.error) line["error"] = *r.error;
                                     log += line.dump() + "\n";
                                     emit(progress, line.dump());
                                   });
  fs::create_directories(out_dir);
  write_text_atomic(out_dir / "rl_log.jsonl", log);
  RunConfig stored = cfg;
  stored.net_specs.encoder = ckpt.net_e.spec();
  stored.net_specs.decoder = ckpt.net_d.spec();
  Checkpoint out{Stage::rl, stored, ckpt.net_e, ckpt.net_d, res.net_u, ckpt.loss_history};
  save_checkpoint(out, out_dir / "checkpoint.json");
  write_sidecar(out_dir / "checkpoint.json", stored, {{"stage", "rl"}, {"source", checkpoint.string()}});
  write_sidecar(out_dir / "rl_log.jsonl", stored, {{"iterations", res.log.size()}});
  return out;
}

fs::path cmd_generate(const fs::path& checkpoint, const State& x0, std::size_t n_steps, Seed seed,
                      const fs::path& out_dir) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  if (ckpt.stage == Stage::pretrained) {
    throw PipelineError("generate needs a finetuned or rl checkpoint, got pretrained");
  }
  if (x0.size() != static_cast<Eigen::Index>(ckpt.net_e.spec().input_dim)) {
    throw ShapeError("x0 dimension does not match the checkpoint");
  }
  const Net& drift = ckpt.stage == Stage::rl ? *ckpt.net_u : ckpt.net_d;
  const fs::path path = out_dir / "trajectory.csv";
  Trajectory traj;
  try {
    traj = rollout(ckpt.net_e, drift, x0, n_steps, ckpt.config.bridge, seed);
  } catch (const RolloutError& e) {
    write_trajectory_csv(out_dir / "trajectory.partial.csv", e.partial());
    throw;
  }
  write_trajectory_csv(path, traj);
  RunConfig meta_cfg = ckpt.config;
  meta_cfg.seed = seed;
  write_sidecar(path, meta_cfg,
                {{"stage", stage_name(ckpt.stage)},
                 {"checkpoint", checkpoint.string()},
                 {"checkpoint_config_hash", config_hash(ckpt.config)},
                 {"n_steps", n_steps},
                 {"x0", vec_json(x0)}});
  return path;
}

std::string EvaluationReport::to_json_text() const {
  json j{{"jsd_coord", jsd_coord},
         {"jsd_tic", jsd_tic},
         {"jsd_msm", jsd_msm},
         {"decorr_tic0", decorr_tic0},
         {"decorr_tic0_reference", decorr_tic0_reference},
         {"basin_occupancy", {{"generated", basin_occupancy_generated}, {"reference", basin_occupancy_reference}}}};
  return j.dump(2);
}

EvaluationReport evaluate_trajectories(const Matrix& generated, const Matrix& reference, const AnalysisConfig& cfg,
                                       Seed seed) {
  if (generated.rows() == 0 || reference.rows() == 0) throw DomainError("evaluation needs non-empty trajectories");
  if (generated.cols() != reference.cols()) {
    throw ShapeError("generated trajectory has dimension " + std::to_string(generated.cols()) +
                     ", reference has " + std::to_string(reference.cols()));
  }
  EvaluationReport rep;
  rep.jsd_coord = histogram_jsd_per_dim(reference, generated, cfg.n_bins, true);

  const auto n_tic = static_cast<std::size_t>(std::min<Eigen::Index>(2, reference.cols()));
  const TicaModel tica = tica_fit(reference, cfg.tica_lag, n_tic);
  const Matrix ref_tic = tica_project(tica, reference);
  const Matrix gen_tic = tica_project(tica, generated);
  rep.jsd_tic = histogram_jsd_per_dim(ref_tic, gen_tic, cfg.n_bins, true);

  const std::size_t k = std::min<std::size_t>(cfg.msm_states, static_cast<std::size_t>(reference.rows()));
  const KMeansResult km = kmeans_fit(ref_tic, k, seed);
  const Vector occ_ref = state_occupancy(assign_clusters(ref_tic, km.centers), k);
  const Vector occ_gen = state_occupancy(assign_clusters(gen_tic, km.centers), k);
  rep.jsd_msm = jsd(std::vector<double>(occ_ref.data(), occ_ref.data() + k),
                    std::vector<double>(occ_gen.data(), occ_gen.data() + k));

  const Vector ref0 = ref_tic.col(0);
  const double mu = ref0.mean();
  const double sd = std::sqrt((ref0.array() - mu).square().mean());
  auto flag = [&](const Vector& series) {
    if (series.size() < 2 || !(sd > 0.0)) return false;
    const std::size_t window = std::min<std::size_t>(cfg.decorr_window, static_cast<std::size_t>(series.size() - 1));
    return decorrelation(series, mu, sd, cfg.decorr_threshold, window).decorrelated;
  };
  rep.decorr_tic0 = flag(gen_tic.col(0));
  rep.decorr_tic0_reference = flag(ref0);

  rep.basin_occupancy_generated = basin_occupancy(generated);
  rep.basin_occupancy_reference = basin_occupancy(reference);

  if (n_tic == 2) {
    const std::array<double, 4> range{ref_tic.col(0).minCoeff(), ref_tic.col(0).maxCoeff(), ref_tic.col(1).minCoeff(),
                                      ref_tic.col(1).maxCoeff()};
    rep.fes_reference = free_energy_surface(ref_tic, cfg.fes_bins, range);
    rep.fes_generated = free_energy_surface(gen_tic, cfg.fes_bins, range);
  }
  return rep;
}

EvaluationReport cmd_evaluate(const RunConfig& cfg, const fs::path& generated_csv, const fs::path& reference_csv,
                              const fs::path& out_dir) {
  cfg.analysis.validate();
  const Trajectory gen = read_trajectory_csv(generated_csv);
  const Trajectory ref = read_trajectory_csv(reference_csv);
  const EvaluationReport rep = evaluate_trajectories(to_matrix(gen), to_matrix(ref), cfg.analysis, cfg.seed);
  const fs::path metrics = out_dir / "metrics.json";
  write_text_atomic(metrics, rep.to_json_text() + "\n");
  write_text_atomic(out_dir / "fes_generated.csv", fes_csv(rep.fes_generated));
  write_text_atomic(out_dir / "fes_reference.csv", fes_csv(rep.fes_reference));
  write_sidecar(metrics, cfg, {{"generated", generated_csv.string()}, {"reference", reference_csv.string()}});
  return rep;
}

}  // namespace vbridge
