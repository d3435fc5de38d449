// vbridge - variational bridge models for time-coarsened stochastic dynamics
// Copyright 2026 The vbridge Authors
// SPDX-License-Identifier: Apache-2.0

#include "vbridge/config.hpp"

#include "vbridge/errors.hpp"
#include "vbridge/io.hpp"

#include "json_detail.hpp"

#include <cstdio>

namespace vbridge {

using nlohmann::json;
using detail::Section;
using detail::read_net_spec;
using detail::net_spec_json;

namespace {

template <typename F>
void with_validation(const std::string& path, F&& validate) {
  try {
    validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(e.what()) + " (at `" + path + "`)");
  }
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

void AnalysisConfig::validate() const {
  if (n_bins == 0) throw ConfigError("analysis.n_bins must be >= 1");
  if (msm_states == 0) throw ConfigError("analysis.msm_states must be >= 1");
  if (tica_lag == 0) throw ConfigError("analysis.tica_lag must be >= 1");
  if (msm_lag == 0) throw ConfigError("analysis.msm_lag must be >= 1");
  if (!(decorr_threshold > 0.0 && decorr_threshold < 1.0)) {
    throw ConfigError("analysis.decorr_threshold must lie in (0, 1)");
  }
  if (decorr_window == 0) throw ConfigError("analysis.decorr_window must be >= 1");
  if (fes_bins == 0) throw ConfigError("analysis.fes_bins must be >= 1");
}

void RunConfig::validate() const {
  encoder.validate();
  bridge.validate();
  soc.validate();
  oracle.validate();
  with_validation("oracle.potential", [&] { potential.validate(); });
  with_validation("net_specs.encoder", [&] { net_specs.encoder.validate(); });
  with_validation("net_specs.decoder", [&] { net_specs.decoder.validate(); });
  training.validate();
  analysis.validate();
  const std::size_t d = dim();
  if (d == 0) throw ConfigError("oracle.x_init must not be empty");
  if (potential.kind == PotentialKind::mueller_brown_like && d != 2) {
    throw ConfigError("oracle.x_init must be 2-D for the mueller_brown_like potential");
  }
  if (net_specs.encoder.input_dim != d || net_specs.encoder.output_dim != d) {
    throw ConfigError("net_specs.encoder must map " + std::to_string(d) + " -> " + std::to_string(d) +
                      " to match oracle.x_init");
  }
  if (net_specs.decoder.input_dim != 1 + 2 * d || net_specs.decoder.output_dim != d) {
    throw ConfigError("net_specs.decoder must map " + std::to_string(1 + 2 * d) + " -> " + std::to_string(d) +
                      " to match oracle.x_init");
  }
}

bool RunConfig::operator==(const RunConfig& o) const {
  return encoder == o.encoder && bridge == o.bridge && soc == o.soc && oracle == o.oracle &&
         potential == o.potential && x_init.size() == o.x_init.size() && x_init == o.x_init &&
         net_specs == o.net_specs && training == o.training && analysis == o.analysis && seed == o.seed;
}

RunConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ConfigError("config parse error at line " + std::to_string(line) + ", column " + std::to_string(col) +
                      ": " + e.what());
  }
  RunConfig cfg;
  {
    Section root(j, "");
    if (const json* v = root.child("encoder")) {
      Section s(*v, "encoder");
      s.num("sigma_e", cfg.encoder.sigma_e);
      s.num("sigma_p", cfg.encoder.sigma_p);
    }
    if (const json* v = root.child("bridge")) {
      Section s(*v, "bridge");
      s.num("sigma", cfg.bridge.sigma);
      s.count("steps", cfg.bridge.steps);
      s.num("t_clamp", cfg.bridge.t_clamp);
      s.num("w_kl", cfg.bridge.w_kl);
      s.num("w_abm", cfg.bridge.w_abm);
      s.flag("t_steps_jitter", cfg.bridge.t_steps_jitter);
    }
    if (const json* v = root.child("soc")) {
      Section s(*v, "soc");
      s.num("beta", cfg.soc.beta);
      s.num("lr_rl", cfg.soc.lr_rl);
      s.num("aug_max_angle", cfg.soc.aug_max_angle);
      s.num("aug_translation_scale", cfg.soc.aug_translation_scale);
      s.count("iterations", cfg.soc.iterations);
      s.count("t_samples_per_iter", cfg.soc.t_samples_per_iter);
      s.count("trajectories_per_iter", cfg.soc.trajectories_per_iter);
      s.count("failure_budget", cfg.soc.failure_budget);
    }
    if (const json* v = root.child("oracle")) {
      Section s(*v, "oracle");
      s.num("dt", cfg.oracle.dt);
      s.num("temperature", cfg.oracle.temperature);
      s.count("n_steps", cfg.oracle.n_steps);
      s.count("save_every", cfg.oracle.save_every);
      s.count("tau_frames", cfg.oracle.tau_frames);
      s.num("domain_bound", cfg.oracle.domain_bound);
      std::string kind = potential_name(cfg.potential.kind);
      s.text("potential", kind);
      try {
        cfg.potential.kind = potential_from_name(kind);
      } catch (const Error&) {
        throw ConfigError("`oracle.potential` must be one of double_well, mueller_brown_like, harmonic");
      }
      std::vector<double> params;
      s.numbers("potential_params", params);
      if (!params.empty()) {
        cfg.potential.params = params;
      } else if (kind != "double_well") {
        cfg.potential.params = kind == "harmonic" ? Potential::harmonic().params : Potential::mueller_brown_like().params;
      }
      std::vector<double> x0(cfg.x_init.data(), cfg.x_init.data() + cfg.x_init.size());
      s.numbers("x_init", x0);
      cfg.x_init = Eigen::Map<const Vector>(x0.data(), static_cast<Eigen::Index>(x0.size()));
    }
    if (const json* v = root.child("net_specs")) {
      Section s(*v, "net_specs");
      const std::size_t d = cfg.dim();
      cfg.net_specs.encoder.input_dim = cfg.net_specs.encoder.output_dim = d;
      cfg.net_specs.decoder.input_dim = 1 + 2 * d;
      cfg.net_specs.decoder.output_dim = d;
      if (const json* e = s.child("encoder")) read_net_spec(*e, "net_specs.encoder", cfg.net_specs.encoder);
      if (const json* e = s.child("decoder")) read_net_spec(*e, "net_specs.decoder", cfg.net_specs.decoder);
    } else {
      const std::size_t d = cfg.dim();
      cfg.net_specs.encoder.input_dim = cfg.net_specs.encoder.output_dim = d;
      cfg.net_specs.decoder.input_dim = 1 + 2 * d;
      cfg.net_specs.decoder.output_dim = d;
    }
    if (const json* v = root.child("training")) {
      Section s(*v, "training");
      s.count("batch_size", cfg.training.batch_size);
      s.count("epochs", cfg.training.epochs);
      s.count("steps_per_epoch", cfg.training.steps_per_epoch);
      s.num("lr_pretrain", cfg.training.lr_pretrain);
      s.num("lr_finetune", cfg.training.lr_finetune);
      s.count("warmup_steps", cfg.training.warmup_steps);
      s.num("plateau_factor", cfg.training.plateau_factor);
      s.count("plateau_patience", cfg.training.plateau_patience);
      s.num("min_lr", cfg.training.min_lr);
      s.num("validation_fraction", cfg.training.validation_fraction);
    }
    if (const json* v = root.child("analysis")) {
      Section s(*v, "analysis");
      s.count("n_bins", cfg.analysis.n_bins);
      s.count("msm_states", cfg.analysis.msm_states);
      s.count("tica_lag", cfg.analysis.tica_lag);
      s.count("msm_lag", cfg.analysis.msm_lag);
      s.num("decorr_threshold", cfg.analysis.decorr_threshold);
      s.count("decorr_window", cfg.analysis.decorr_window);
      s.count("fes_bins", cfg.analysis.fes_bins);
    }
    if (const json* v = root.child("seed")) {
      if (!v->is_number_unsigned()) throw ConfigError("`seed` must be a non-negative integer");
      cfg.seed = v->get<Seed>();
    }
  }
  cfg.validate();
  return cfg;
}

std::string config_to_json_text(const RunConfig& c, int indent) {
  json j;
  j["encoder"] = {{"sigma_e", c.encoder.sigma_e}, {"sigma_p", c.encoder.sigma_p}};
  j["bridge"] = {{"sigma", c.bridge.sigma},   {"steps", c.bridge.steps}, {"t_clamp", c.bridge.t_clamp},
                 {"w_kl", c.bridge.w_kl},     {"w_abm", c.bridge.w_abm}, {"t_steps_jitter", c.bridge.t_steps_jitter}};
  j["soc"] = {{"beta", c.soc.beta},
              {"lr_rl", c.soc.lr_rl},
              {"aug_max_angle", c.soc.aug_max_angle},
              {"aug_translation_scale", c.soc.aug_translation_scale},
              {"iterations", c.soc.iterations},
              {"t_samples_per_iter", c.soc.t_samples_per_iter},
              {"trajectories_per_iter", c.soc.trajectories_per_iter},
              {"failure_budget", c.soc.failure_budget}};
  j["oracle"] = {{"dt", c.oracle.dt},
                 {"temperature", c.oracle.temperature},
                 {"n_steps", c.oracle.n_steps},
                 {"save_every", c.oracle.save_every},
                 {"tau_frames", c.oracle.tau_frames},
                 {"domain_bound", c.oracle.domain_bound},
                 {"potential", potential_name(c.potential.kind)},
                 {"potential_params", c.potential.params},
                 {"x_init", std::vector<double>(c.x_init.data(), c.x_init.data() + c.x_init.size())}};
  j["net_specs"] = {{"encoder", net_spec_json(c.net_specs.encoder)}, {"decoder", net_spec_json(c.net_specs.decoder)}};
  j["training"] = {{"batch_size", c.training.batch_size},
                   {"epochs", c.training.epochs},
                   {"steps_per_epoch", c.training.steps_per_epoch},
                   {"lr_pretrain", c.training.lr_pretrain},
                   {"lr_finetune", c.training.lr_finetune},
                   {"warmup_steps", c.training.warmup_steps},
                   {"plateau_factor", c.training.plateau_factor},
                   {"plateau_patience", c.training.plateau_patience},
                   {"min_lr", c.training.min_lr},
                   {"validation_fraction", c.training.validation_fraction}};
  j["analysis"] = {{"n_bins", c.analysis.n_bins},
                   {"msm_states", c.analysis.msm_states},
                   {"tica_lag", c.analysis.tica_lag},
                   {"msm_lag", c.analysis.msm_lag},
                   {"decorr_threshold", c.analysis.decorr_threshold},
                   {"decorr_window", c.analysis.decorr_window},
                   {"fes_bins", c.analysis.fes_bins}};
  j["seed"] = c.seed;
  return j.dump(indent);
}

RunConfig load_config(const std::filesystem::path& path) {
  return config_from_json_text(read_text_file(path));
}

void save_config(const RunConfig& cfg, const std::filesystem::path& path) {
  write_text_atomic(path, config_to_json_text(cfg) + "\n");
}

std::string config_hash(const RunConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : config_to_json_text(cfg, -1)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace vbridge
