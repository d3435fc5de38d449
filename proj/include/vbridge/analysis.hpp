// vbridge - variational bridge models for time-coarsened stochastic dynamics
// Copyright 2026 The vbridge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vbridge/types.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

namespace vbridge {

// Trajectory evaluation: histogram JSD, TICA, k-means++ microstates, MSMs,
// TIC0 decorrelation and free-energy surfaces. Trajectories enter as
// n x d matrices (one row per frame).

Matrix to_matrix(const Trajectory& traj);

struct Histogram {
  std::vector<double> edges;  // n_bins + 1, strictly increasing
  std::vector<std::size_t> counts;

  /// Counts divided by their total; all zeros when empty.
  std::vector<double> normalized() const;
};

/// Equal-width histogram over [lo, hi]. Values outside the range fall into
/// the nearest edge bin. A degenerate range (lo == hi) is widened by +-0.5.
Histogram make_histogram(const Vector& samples, double lo, double hi, std::size_t n_bins);

/// Jensen-Shannon divergence of two probability vectors, in nats.
double jsd(const std::vector<double>& p, const std::vector<double>& q);

/// Per-dimension histogram JSD between sample sets `a` and `b` (rows are
/// samples), returned per column. With range_from_reference the bin range is
/// [min, max] of `a`; otherwise of both sets together. Throws DomainError on
/// empty input, ShapeError on column mismatch.
std::vector<double> histogram_jsd_per_dim(const Matrix& a, const Matrix& b, std::size_t n_bins = 50,
                                          bool range_from_reference = true);

/// Mean of histogram_jsd_per_dim over dimensions.
double histogram_jsd(const Matrix& a, const Matrix& b, std::size_t n_bins = 50, bool range_from_reference = true);

struct TicaModel {
  Vector mean;
  Matrix components;  // d x k, columns sorted by descending eigenvalue
  Vector eigenvalues;
  std::size_t lag = 1;
};

/// Solves C_lag v = lambda C_0 v on mean-free features, with C_lag
/// symmetrized and C_0 regularized by 1e-8 * trace(C_0) / d. Components are
/// normalized to unit instantaneous variance. Throws DomainError when there
/// are too few frames, NumericalError when C_0 cannot be factorized.
TicaModel tica_fit(const Matrix& features, std::size_t lag, std::size_t n_components = 2);

/// (features - mean) * components. Throws ShapeError on dimension mismatch.
Matrix tica_project(const TicaModel& model, const Matrix& features);

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Eigenvalues descending; eigenvectors in matching columns.
void jacobi_eigen(const Matrix& symmetric, Vector& eigenvalues, Matrix& eigenvectors);

struct KMeansResult {
  Matrix centers;  // k x d
  std::vector<double> inertia_history;
  std::size_t iterations = 0;
};

/// k-means++ seeding then Lloyd iterations until the inertia improves by
/// less than `tol` or max_iter is reached. Throws ConfigError when k > n.
KMeansResult kmeans_fit(const Matrix& points, std::size_t k, Seed seed, std::size_t max_iter = 200, double tol = 1e-8);

/// Index of the nearest center for every row.
std::vector<int> assign_clusters(const Matrix& points, const Matrix& centers);

struct MsmModel {
  Matrix transition;  // k x k, row-stochastic
  Vector stationary;
  Matrix counts;
  std::size_t lag = 1;
};

/// Transition counts at `lag`, self-loops for unvisited rows, row
/// normalization, stationary vector by power iteration on the lazy chain.
MsmModel msm_estimate(const std::vector<int>& labels, std::size_t k, std::size_t lag);

/// Fraction of frames in each of k states.
Vector state_occupancy(const std::vector<int>& labels, std::size_t k);

struct Decorrelation {
  std::vector<double> acf;  // lags 0..window
  bool decorrelated = false;
};

/// Autocorrelation normalized by reference moments:
/// acf(l) = mean_t[(y_t - mu)(y_{t+l} - mu)] / sd^2. The series is flagged
/// decorrelated when acf(0) > threshold and acf drops strictly below it at
/// some lag <= window. Throws DomainError for sd <= 0 or fewer than 2 frames.
Decorrelation decorrelation(const Vector& series, double ref_mean, double ref_sd, double threshold = 0.5,
                            std::size_t window = 1000);

struct FreeEnergySurface {
  std::size_t bins = 0;
  double lo0 = 0.0, hi0 = 0.0, lo1 = 0.0, hi1 = 0.0;
  /// Row-major bins x bins grid of -ln p; empty bins unset.
  std::vector<std::optional<double>> values;

  const std::optional<double>& at(std::size_t i, std::size_t j) const { return values[i * bins + j]; }
};

/// 2-D histogram of the first two columns over the given ranges, or the data range when omitted.
FreeEnergySurface free_energy_surface(const Matrix& tics, std::size_t bins,
                                      std::optional<std::array<double, 4>> range = std::nullopt);

}  // namespace vbridge
