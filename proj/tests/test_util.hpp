// vbridge - variational bridge models for time-coarsened stochastic dynamics
// Copyright 2026 The vbridge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vbridge/nn.hpp"
#include "vbridge/types.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>

namespace vbridge::test {

inline double rel_err(const Vector& got, const Vector& want) {
  const double scale = std::max(want.norm(), 1e-300);
  return (got - want).norm() / scale;
}

/// Central differences of f over every parameter of net.
inline Vector param_fd(Net net, const std::function<double(const Net&)>& f, double h = 1e-6) {
  Vector p = net.flat_parameters();
  Vector out(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double orig = p[i];
    p[i] = orig + h;
    net.set_flat_parameters(p);
    const double up = f(net);
    p[i] = orig - h;
    net.set_flat_parameters(p);
    const double down = f(net);
    p[i] = orig;
    out[i] = (up - down) / (2.0 * h);
  }
  return out;
}

/// Central differences of a scalar function of a vector.
inline Vector vector_fd(const Vector& x, const std::function<double(const Vector&)>& f, double h = 1e-6) {
  Vector out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector up = x, down = x;
    up[i] += h;
    down[i] -= h;
    out[i] = (f(up) - f(down)) / (2.0 * h);
  }
  return out;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("vbridge_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Kolmogorov-Smirnov p-value (asymptotic) for statistic d at sample size n.
inline double ks_p_value(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  double sum = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = 2.0 * ((j % 2) ? 1.0 : -1.0) * std::exp(-2.0 * j * j * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-12) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

}  // namespace vbridge::test
