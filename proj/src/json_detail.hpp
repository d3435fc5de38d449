// vbridge - variational bridge models for time-coarsened stochastic dynamics
// Copyright 2026 The vbridge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vbridge/errors.hpp"
#include "vbridge/nn.hpp"

#include <json.hpp>

#include <cstdint>
#include <exception>
#include <set>
#include <string>
#include <vector>

namespace vbridge::detail {

using nlohmann::json;

// Walks one JSON object, filling fields that are present and remembering
// which keys were seen so leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be a JSON object");
  }

  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) throw ConfigError("unknown config key `" + join(key) + "`");
    }
  }

  void num(const char* key, double& out) {
    if (const json* v = take(key)) {
      if (!v->is_number()) throw ConfigError("`" + join(key) + "` must be a number");
      out = v->get<double>();
    }
  }

  void count(const char* key, std::size_t& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_integer() || v->get<std::int64_t>() < 0) {
        throw ConfigError("`" + join(key) + "` must be a non-negative integer");
      }
      out = v->get<std::size_t>();
    }
  }

  void flag(const char* key, bool& out) {
    if (const json* v = take(key)) {
      if (!v->is_boolean()) throw ConfigError("`" + join(key) + "` must be a boolean");
      out = v->get<bool>();
    }
  }

  void text(const char* key, std::string& out) {
    if (const json* v = take(key)) {
      if (!v->is_string()) throw ConfigError("`" + join(key) + "` must be a string");
      out = v->get<std::string>();
    }
  }

  void numbers(const char* key, std::vector<double>& out) {
    if (const json* v = take(key)) {
      if (!v->is_array()) throw ConfigError("`" + join(key) + "` must be an array of numbers");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_number()) throw ConfigError("`" + join(key) + "` must be an array of numbers");
        out.push_back(e.get<double>());
      }
    }
  }

  void counts(const char* key, std::vector<std::size_t>& out) {
    if (const json* v = take(key)) {
      if (!v->is_array()) throw ConfigError("`" + join(key) + "` must be an array of integers");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_number_integer() || e.get<std::int64_t>() < 0) {
          throw ConfigError("`" + join(key) + "` must be an array of non-negative integers");
        }
        out.push_back(e.get<std::size_t>());
      }
    }
  }

  /// Nested object, or nullptr when absent.
  const json* child(const char* key) { return take(key); }

  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const json* take(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  std::string where() const { return path_.empty() ? "config root" : "`" + path_ + "`"; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline TimeEmbedding::Kind embedding_from_name(const std::string& name, const std::string& path) {
  if (name == "none") return TimeEmbedding::Kind::none;
  if (name == "scalar_append") return TimeEmbedding::Kind::scalar_append;
  if (name == "sinusoidal") return TimeEmbedding::Kind::sinusoidal;
  throw ConfigError("`" + path + "` must be one of none, scalar_append, sinusoidal");
}

inline std::string embedding_name(TimeEmbedding::Kind k) {
  switch (k) {
    case TimeEmbedding::Kind::none: return "none";
    case TimeEmbedding::Kind::scalar_append: return "scalar_append";
    case TimeEmbedding::Kind::sinusoidal: return "sinusoidal";
  }
  return "none";
}

inline void read_net_spec(const json& j, const std::string& path, NetSpec& spec) {
  Section s(j, path);
  s.count("input_dim", spec.input_dim);
  s.counts("hidden_dims", spec.hidden_dims);
  s.count("output_dim", spec.output_dim);
  std::string act = activation_name(spec.activation);
  s.text("activation", act);
  try {
    spec.activation = activation_from_name(act);
  } catch (const Error&) {
    throw ConfigError("`" + s.join("activation") + "` must be one of identity, tanh, silu");
  }
  if (const json* te = s.child("time_embedding")) {
    Section t(*te, s.join("time_embedding"));
    std::string kind = embedding_name(spec.time_embedding.kind);
    t.text("kind", kind);
    spec.time_embedding.kind = embedding_from_name(kind, t.join("kind"));
    t.count("frequencies", spec.time_embedding.frequencies);
  }
}

inline json net_spec_json(const NetSpec& s) {
  return {{"input_dim", s.input_dim},
          {"hidden_dims", s.hidden_dims},
          {"output_dim", s.output_dim},
          {"activation", activation_name(s.activation)},
          {"time_embedding",
           {{"kind", embedding_name(s.time_embedding.kind)}, {"frequencies", s.time_embedding.frequencies}}}};
}

}  // namespace vbridge::detail
