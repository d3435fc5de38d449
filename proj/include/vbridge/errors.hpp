// vbridge - variational bridge models for time-coarsened stochastic dynamics
// Copyright 2026 The vbridge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace vbridge {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration value, unknown key, or malformed config document.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Vector/matrix dimensions disagree with what an operation expects.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An argument outside the mathematical domain of an operation (t outside (0,1), empty input).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Missing, empty or unreadable data files.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Pipeline stages invoked out of order.
class PipelineError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or integrator blow-ups. Carries the offending index
/// (layer, step, sample or iteration, depending on the thrower) when known.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what, std::optional<std::size_t> index = std::nullopt)
      : Error(what), index_(index) {}

  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  std::optional<std::size_t> index_;
};

}  // namespace vbridge
