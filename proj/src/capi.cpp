// vbridge - variational bridge models for time-coarsened stochastic dynamics
// Copyright 2026 The vbridge Authors
// SPDX-License-Identifier: Apache-2.0

#include "vbridge/vbridge.h"

#include "vbridge/config.hpp"
#include "vbridge/errors.hpp"
#include "vbridge/io.hpp"
#include "vbridge/pipeline.hpp"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

struct vb_config {
  vbridge::RunConfig cfg;
};

struct vb_checkpoint {
  vbridge::Checkpoint ckpt;
  std::string stage;
};

namespace {

thread_local std::string g_last_error;

vb_status fail(vb_status s, const char* what) {
  g_last_error = what;
  return s;
}

// Maps the exception in flight to a status code.
vb_status translate() {
  try {
    throw;
  } catch (const vbridge::ConfigError& e) {
    return fail(VB_ERR_CONFIG, e.what());
  } catch (const vbridge::NumericalError& e) {
    return fail(VB_ERR_NUMERICAL, e.what());
  } catch (const vbridge::ShapeError& e) {
    return fail(VB_ERR_SHAPE, e.what());
  } catch (const vbridge::DomainError& e) {
    return fail(VB_ERR_DOMAIN, e.what());
  } catch (const vbridge::PipelineError& e) {
    return fail(VB_ERR_PIPELINE, e.what());
  } catch (const vbridge::DataError& e) {
    return fail(VB_ERR_DATA, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(VB_ERR_DATA, e.what());
  } catch (const std::bad_alloc&) {
    return fail(VB_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(VB_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(VB_ERR_INTERNAL, "unknown error");
  }
}

template <typename F>
vb_status guarded(F&& body) {
  g_last_error.clear();
  try {
    body();
    return VB_OK;
  } catch (...) {
    return translate();
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

vbridge::ProgressFn progress_of(vb_progress_fn fn, void* user) {
  if (!fn) return {};
  return [fn, user](const std::string& line) { fn(line.c_str(), user); };
}

#define VB_REQUIRE(cond, msg) \
  do {                        \
    if (!(cond)) return fail(VB_ERR_INVALID_ARGUMENT, msg); \
  } while (0)

}  // namespace

extern "C" {

const char* vb_version(void) { return "0.1.0"; }

const char* vb_last_error(void) { return g_last_error.c_str(); }

const char* vb_status_name(vb_status status) {
  switch (status) {
    case VB_OK: return "ok";
    case VB_ERR_INVALID_ARGUMENT: return "invalid argument";
    case VB_ERR_CONFIG: return "config error";
    case VB_ERR_DATA: return "data error";
    case VB_ERR_NUMERICAL: return "numerical error";
    case VB_ERR_SHAPE: return "shape error";
    case VB_ERR_DOMAIN: return "domain error";
    case VB_ERR_PIPELINE: return "pipeline error";
    case VB_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

int vb_exit_code(vb_status status) {
  switch (status) {
    case VB_OK: return 0;
    case VB_ERR_CONFIG: return 2;
    case VB_ERR_DATA:
    case VB_ERR_SHAPE:
    case VB_ERR_DOMAIN:
    case VB_ERR_PIPELINE: return 3;
    case VB_ERR_NUMERICAL: return 4;
    default: return 1;
  }
}

void vb_string_free(char* s) { std::free(s); }

vb_status vb_config_default(vb_config** out) {
  VB_REQUIRE(out, "out is NULL");
  return guarded([&] { *out = new vb_config{}; });
}

vb_status vb_config_load(const char* path, vb_config** out) {
  VB_REQUIRE(path && out, "path or out is NULL");
  return guarded([&] { *out = new vb_config{vbridge::load_config(path)}; });
}

vb_status vb_config_parse(const char* json_text, vb_config** out) {
  VB_REQUIRE(json_text && out, "json_text or out is NULL");
  return guarded([&] { *out = new vb_config{vbridge::config_from_json_text(json_text)}; });
}

vb_status vb_config_save(const vb_config* cfg, const char* path) {
  VB_REQUIRE(cfg && path, "cfg or path is NULL");
  return guarded([&] { vbridge::save_config(cfg->cfg, path); });
}

vb_status vb_config_to_json(const vb_config* cfg, char** out) {
  VB_REQUIRE(cfg && out, "cfg or out is NULL");
  return guarded([&] { *out = dup_string(vbridge::config_to_json_text(cfg->cfg)); });
}

vb_status vb_config_hash(const vb_config* cfg, char** out) {
  VB_REQUIRE(cfg && out, "cfg or out is NULL");
  return guarded([&] { *out = dup_string(vbridge::config_hash(cfg->cfg)); });
}

vb_status vb_config_set_seed(vb_config* cfg, uint64_t seed) {
  VB_REQUIRE(cfg, "cfg is NULL");
  cfg->cfg.seed = seed;
  return VB_OK;
}

vb_status vb_config_get_seed(const vb_config* cfg, uint64_t* out) {
  VB_REQUIRE(cfg && out, "cfg or out is NULL");
  *out = cfg->cfg.seed;
  return VB_OK;
}

vb_status vb_config_dim(const vb_config* cfg, size_t* out) {
  VB_REQUIRE(cfg && out, "cfg or out is NULL");
  *out = cfg->cfg.dim();
  return VB_OK;
}

vb_status vb_config_x_init(const vb_config* cfg, double* out, size_t capacity, size_t* dim) {
  VB_REQUIRE(cfg && dim, "cfg or dim is NULL");
  *dim = cfg->cfg.dim();
  VB_REQUIRE(out || capacity == 0, "out is NULL");
  for (size_t i = 0; i < std::min(capacity, *dim); ++i) out[i] = cfg->cfg.x_init[static_cast<Eigen::Index>(i)];
  return VB_OK;
}

void vb_config_free(vb_config* cfg) { delete cfg; }

vb_status vb_checkpoint_load(const char* path, vb_checkpoint** out) {
  VB_REQUIRE(path && out, "path or out is NULL");
  return guarded([&] {
    vbridge::Checkpoint c = vbridge::load_checkpoint(path);
    std::string stage = vbridge::stage_name(c.stage);
    *out = new vb_checkpoint{std::move(c), std::move(stage)};
  });
}

const char* vb_checkpoint_stage(const vb_checkpoint* ckpt) { return ckpt ? ckpt->stage.c_str() : ""; }

vb_status vb_checkpoint_dim(const vb_checkpoint* ckpt, size_t* out) {
  VB_REQUIRE(ckpt && out, "ckpt or out is NULL");
  *out = ckpt->ckpt.net_e.spec().input_dim;
  return VB_OK;
}

vb_status vb_checkpoint_config(const vb_checkpoint* ckpt, vb_config** out) {
  VB_REQUIRE(ckpt && out, "ckpt or out is NULL");
  return guarded([&] { *out = new vb_config{ckpt->ckpt.config}; });
}

vb_status vb_checkpoint_rollout(const vb_checkpoint* ckpt, const double* x0, size_t dim, size_t n_steps,
                                uint64_t seed, double* out) {
  VB_REQUIRE(ckpt && x0 && out, "ckpt, x0 or out is NULL");
  return guarded([&] {
    const auto& c = ckpt->ckpt;
    if (dim != c.net_e.spec().input_dim) throw vbridge::ShapeError("x0 dimension does not match the checkpoint");
    if (c.stage == vbridge::Stage::pretrained) {
      throw vbridge::PipelineError("rollout needs a finetuned or rl checkpoint, got pretrained");
    }
    const vbridge::State start = Eigen::Map<const vbridge::Vector>(x0, static_cast<Eigen::Index>(dim));
    const vbridge::Net& drift = c.stage == vbridge::Stage::rl ? *c.net_u : c.net_d;
    const auto traj = vbridge::rollout(c.net_e, drift, start, n_steps, c.config.bridge, seed);
    for (size_t n = 0; n < traj.size(); ++n) {
      for (size_t i = 0; i < dim; ++i) out[n * dim + i] = traj[n][static_cast<Eigen::Index>(i)];
    }
  });
}

void vb_checkpoint_free(vb_checkpoint* ckpt) { delete ckpt; }

vb_status vb_cmd_oracle_sim(const vb_config* cfg, const char* out_dir) {
  VB_REQUIRE(cfg && out_dir, "cfg or out_dir is NULL");
  return guarded([&] { vbridge::cmd_oracle_sim(cfg->cfg, out_dir); });
}

vb_status vb_cmd_build_pairs(const vb_config* cfg, const char* trajectory_csv, const char* out_dir,
                             size_t max_pairs) {
  VB_REQUIRE(cfg && trajectory_csv && out_dir, "cfg, trajectory_csv or out_dir is NULL");
  return guarded([&] { vbridge::cmd_build_pairs(cfg->cfg, trajectory_csv, out_dir, max_pairs); });
}

vb_status vb_cmd_pretrain(const vb_config* cfg, const char* dataset_csv, const char* out_dir,
                          vb_progress_fn progress, void* user) {
  VB_REQUIRE(cfg && dataset_csv && out_dir, "cfg, dataset_csv or out_dir is NULL");
  return guarded([&] { vbridge::cmd_pretrain(cfg->cfg, dataset_csv, out_dir, progress_of(progress, user)); });
}

vb_status vb_cmd_finetune(const vb_config* cfg, const char* checkpoint, const char* pairs_csv, const char* out_dir,
                          vb_progress_fn progress, void* user) {
  VB_REQUIRE(cfg && checkpoint && pairs_csv && out_dir, "cfg, checkpoint, pairs_csv or out_dir is NULL");
  return guarded(
      [&] { vbridge::cmd_finetune(cfg->cfg, checkpoint, pairs_csv, out_dir, progress_of(progress, user)); });
}

vb_status vb_cmd_rl_finetune(const vb_config* cfg, const char* checkpoint, const char* targets_csv,
                             const double* x_ref, size_t dim, const char* out_dir, vb_progress_fn progress,
                             void* user) {
  VB_REQUIRE(cfg && checkpoint && out_dir, "cfg, checkpoint or out_dir is NULL");
  VB_REQUIRE(targets_csv || x_ref, "either targets_csv or x_ref is required");
  return guarded([&] {
    std::vector<vbridge::RlTarget> targets;
    if (targets_csv) {
      targets = vbridge::read_targets_csv(targets_csv);
    } else {
      if (dim != cfg->cfg.dim()) throw vbridge::ShapeError("x_ref dimension does not match the config");
      targets.push_back({cfg->cfg.x_init, Eigen::Map<const vbridge::Vector>(x_ref, static_cast<Eigen::Index>(dim))});
    }
    vbridge::cmd_rl(cfg->cfg, checkpoint, targets, out_dir, progress_of(progress, user));
  });
}

vb_status vb_cmd_generate(const char* checkpoint, const double* x0, size_t dim, size_t n_steps, uint64_t seed,
                          const char* out_dir) {
  VB_REQUIRE(checkpoint && x0 && out_dir, "checkpoint, x0 or out_dir is NULL");
  return guarded([&] {
    vbridge::cmd_generate(checkpoint, Eigen::Map<const vbridge::Vector>(x0, static_cast<Eigen::Index>(dim)), n_steps,
                          seed, out_dir);
  });
}

vb_status vb_cmd_evaluate(const vb_config* cfg, const char* generated_csv, const char* reference_csv,
                          const char* out_dir, char** metrics_json) {
  VB_REQUIRE(cfg && generated_csv && reference_csv && out_dir, "cfg, generated_csv, reference_csv or out_dir is NULL");
  return guarded([&] {
    const auto rep = vbridge::cmd_evaluate(cfg->cfg, generated_csv, reference_csv, out_dir);
    if (metrics_json) *metrics_json = dup_string(rep.to_json_text());
  });
}

}  // extern "C"
