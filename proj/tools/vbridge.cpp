// vbridge - variational bridge models for time-coarsened stochastic dynamics
// Copyright 2026 The vbridge Authors
// SPDX-License-Identifier: Apache-2.0

#include "vbridge/vbridge.h"

#include <CLI11.hpp>

#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
};

struct ConfigHandle {
  vb_config* p = nullptr;
  ~ConfigHandle() { vb_config_free(p); }
};

struct CheckpointHandle {
  vb_checkpoint* p = nullptr;
  ~CheckpointHandle() { vb_checkpoint_free(p); }
};

int report(vb_status s) {
  if (s != VB_OK) std::fprintf(stderr, "vbridge: %s: %s\n", vb_status_name(s), vb_last_error());
  return vb_exit_code(s);
}

void print_line(const char* line, void*) {
  std::fprintf(stderr, "%s\n", line);
}

std::vector<double> parse_vector(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
  return out;
}

// Config from --config, else the fallback checkpoint's snapshot, else defaults;
// --seed overrides either.
vb_status resolve_config(const Globals& g, const std::string& fallback_checkpoint, ConfigHandle& cfg) {
  vb_status s = VB_OK;
  if (!g.config_path.empty()) {
    s = vb_config_load(g.config_path.c_str(), &cfg.p);
  } else if (!fallback_checkpoint.empty()) {
    CheckpointHandle ck;
    s = vb_checkpoint_load(fallback_checkpoint.c_str(), &ck.p);
    if (s == VB_OK) s = vb_checkpoint_config(ck.p, &cfg.p);
  } else {
    s = vb_config_default(&cfg.p);
  }
  if (s == VB_OK && g.seed) s = vb_config_set_seed(cfg.p, *g.seed);
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vbridge: variational bridge models for time-coarsened stochastic dynamics"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "Run configuration (JSON)")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Seed overriding the configured one");
  app.add_option("--out", g.out, "Output directory");

  auto* sim = app.add_subcommand("oracle-sim", "Simulate the Langevin oracle");

  std::string traj_path;
  std::size_t max_pairs = 0;
  auto* pairs = app.add_subcommand("build-pairs", "Extract lagged pairs from a trajectory");
  pairs->add_option("--trajectory", traj_path, "Trajectory CSV")->required();
  pairs->add_option("--max-pairs", max_pairs, "Subsample to at most this many pairs (0 keeps all)");

  std::string data_path;
  auto* pre = app.add_subcommand("pretrain", "Train on single structures");
  pre->add_option("--data", data_path, "Trajectory CSV of equilibrium samples")->required();

  std::string ckpt_path, pairs_path;
  auto* fine = app.add_subcommand("finetune", "Train on lagged pairs from a pretrained checkpoint");
  fine->add_option("--checkpoint", ckpt_path, "Pretrained checkpoint")->required();
  fine->add_option("--pairs", pairs_path, "Pair CSV")->required();

  std::string targets_path, x_ref_text;
  auto* rl = app.add_subcommand("rl-finetune", "Reward finetuning from a finetuned checkpoint");
  rl->add_option("--checkpoint", ckpt_path, "Finetuned checkpoint")->required();
  auto* tgt = rl->add_option("--targets", targets_path, "Target CSV with x0_* and x_ref_* columns");
  rl->add_option("--x-ref", x_ref_text, "Single target state, comma separated; x0 is the config's x_init")
      ->excludes(tgt);

  std::string x0_text;
  std::size_t n_steps = 1000;
  auto* gen = app.add_subcommand("generate", "Roll out a trained model");
  gen->add_option("--checkpoint", ckpt_path, "Finetuned or rl checkpoint")->required();
  gen->add_option("--x0", x0_text, "Start state, comma separated (default: config x_init)");
  gen->add_option("--steps", n_steps, "Number of coarse steps");

  std::string gen_path, ref_path;
  auto* eval = app.add_subcommand("evaluate", "Compare a generated trajectory with a reference");
  eval->add_option("--generated", gen_path, "Generated trajectory CSV")->required();
  eval->add_option("--reference", ref_path, "Reference trajectory CSV")->required();

  CLI11_PARSE(app, argc, argv);

  const char* out = g.out.c_str();
  ConfigHandle cfg;
  vb_status s = VB_OK;

  if (sim->parsed()) {
    if ((s = resolve_config(g, "", cfg)) == VB_OK) s = vb_cmd_oracle_sim(cfg.p, out);
  } else if (pairs->parsed()) {
    if ((s = resolve_config(g, "", cfg)) == VB_OK) s = vb_cmd_build_pairs(cfg.p, traj_path.c_str(), out, max_pairs);
  } else if (pre->parsed()) {
    if ((s = resolve_config(g, "", cfg)) == VB_OK) {
      s = vb_cmd_pretrain(cfg.p, data_path.c_str(), out, print_line, nullptr);
    }
  } else if (fine->parsed()) {
    if ((s = resolve_config(g, ckpt_path, cfg)) == VB_OK) {
      s = vb_cmd_finetune(cfg.p, ckpt_path.c_str(), pairs_path.c_str(), out, print_line, nullptr);
    }
  } else if (rl->parsed()) {
    if (targets_path.empty() && x_ref_text.empty()) {
      std::fprintf(stderr, "vbridge: rl-finetune needs --targets or --x-ref\n");
      return 2;
    }
    if ((s = resolve_config(g, ckpt_path, cfg)) == VB_OK) {
      std::vector<double> x_ref;
      try {
        if (!x_ref_text.empty()) x_ref = parse_vector(x_ref_text);
      } catch (const std::exception&) {
        std::fprintf(stderr, "vbridge: cannot parse --x-ref '%s'\n", x_ref_text.c_str());
        return 2;
      }
      s = vb_cmd_rl_finetune(cfg.p, ckpt_path.c_str(), targets_path.empty() ? nullptr : targets_path.c_str(),
                             x_ref.empty() ? nullptr : x_ref.data(), x_ref.size(), out, print_line, nullptr);
    }
  } else if (gen->parsed()) {
    if ((s = resolve_config(g, ckpt_path, cfg)) == VB_OK) {
      std::vector<double> x0;
      try {
        x0 = parse_vector(x0_text);
      } catch (const std::exception&) {
        std::fprintf(stderr, "vbridge: cannot parse --x0 '%s'\n", x0_text.c_str());
        return 2;
      }
      if (x0.empty()) {
        std::size_t dim = 0;
        vb_config_x_init(cfg.p, nullptr, 0, &dim);
        x0.resize(dim);
        vb_config_x_init(cfg.p, x0.data(), dim, &dim);
      }
      std::uint64_t seed = 0;
      vb_config_get_seed(cfg.p, &seed);
      s = vb_cmd_generate(ckpt_path.c_str(), x0.data(), x0.size(), n_steps, seed, out);
    }
  } else if (eval->parsed()) {
    if ((s = resolve_config(g, "", cfg)) == VB_OK) {
      char* metrics = nullptr;
      s = vb_cmd_evaluate(cfg.p, gen_path.c_str(), ref_path.c_str(), out, &metrics);
      if (s == VB_OK) std::printf("%s\n", metrics);
      vb_string_free(metrics);
    }
  }
  return report(s);
}
