// vbridge - variational bridge models for time-coarsened stochastic dynamics
// Copyright 2026 The vbridge Authors
// SPDX-License-Identifier: Apache-2.0

#include "vbridge/analysis.hpp"

#include "vbridge/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vbridge {

Matrix to_matrix(const Trajectory& traj) {
  if (traj.empty()) return Matrix(0, 0);
  Matrix m(static_cast<Eigen::Index>(traj.size()), traj.front().size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (traj[i].size() != m.cols()) throw ShapeError("trajectory frames differ in dimension");
    m.row(static_cast<Eigen::Index>(i)) = traj[i].transpose();
  }
  return m;
}

std::vector<double> Histogram::normalized() const {
  std::vector<double> p(counts.size(), 0.0);
  std::size_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) return p;
  for (std::size_t i = 0; i < counts.size(); ++i) p[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  return p;
}

Histogram make_histogram(const Vector& samples, double lo, double hi, std::size_t n_bins) {
  if (n_bins == 0) throw ConfigError("histogram needs at least one bin");
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  Histogram h;
  h.edges.resize(n_bins + 1);
  for (std::size_t i = 0; i <= n_bins; ++i) {
    h.edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_bins);
  }
  h.counts.assign(n_bins, 0);
  const double width = (hi - lo) / static_cast<double>(n_bins);
  for (Eigen::Index i = 0; i < samples.size(); ++i) {
    const double pos = std::floor((samples[i] - lo) / width);
    const auto bin = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(n_bins - 1)));
    h.counts[bin] += 1;
  }
  return h;
}

double jsd(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw ShapeError("JSD inputs differ in length");
  double out = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) out += 0.5 * p[i] * std::log(p[i] / m);
    if (q[i] > 0.0) out += 0.5 * q[i] * std::log(q[i] / m);
  }
  return std::max(0.0, out);
}

std::vector<double> histogram_jsd_per_dim(const Matrix& a, const Matrix& b, std::size_t n_bins,
                                          bool range_from_reference) {
  if (a.rows() == 0 || b.rows() == 0) throw DomainError("JSD needs non-empty sample sets");
  if (a.cols() != b.cols()) throw ShapeError("JSD sample sets differ in dimension");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(a.cols()));
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    double lo = a.col(c).minCoeff();
    double hi = a.col(c).maxCoeff();
    if (!range_from_reference) {
      lo = std::min(lo, b.col(c).minCoeff());
      hi = std::max(hi, b.col(c).maxCoeff());
    }
    const auto ha = make_histogram(a.col(c), lo, hi, n_bins);
    const auto hb = make_histogram(b.col(c), lo, hi, n_bins);
    out.push_back(jsd(ha.normalized(), hb.normalized()));
  }
  return out;
}

double histogram_jsd(const Matrix& a, const Matrix& b, std::size_t n_bins, bool range_from_reference) {
  const auto per_dim = histogram_jsd_per_dim(a, b, n_bins, range_from_reference);
  double s = 0.0;
  for (double v : per_dim) s += v;
  return s / static_cast<double>(per_dim.size());
}

void jacobi_eigen(const Matrix& symmetric, Vector& eigenvalues, Matrix& eigenvectors) {
  const Eigen::Index n = symmetric.rows();
  if (symmetric.cols() != n) throw ShapeError("Jacobi eigensolver needs a square matrix");
  Matrix a = 0.5 * (symmetric + symmetric.transpose());
  Matrix v = Matrix::Identity(n, n);
  const double scale = std::max(a.norm(), std::numeric_limits<double>::min());
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) <= 1e-15 * scale) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) { return a(x, x) > a(y, y); });
  eigenvalues.resize(n);
  eigenvectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    eigenvalues[i] = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
    eigenvectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
  }
}

TicaModel tica_fit(const Matrix& features, std::size_t lag, std::size_t n_components) {
  const Eigen::Index n = features.rows();
  const Eigen::Index d = features.cols();
  if (lag == 0) throw DomainError("TICA lag must be >= 1");
  if (d == 0 || n <= static_cast<Eigen::Index>(lag) + d) {
    throw DomainError("TICA needs more than lag + dim frames (got " + std::to_string(n) + ")");
  }
  TicaModel model;
  model.lag = lag;
  model.mean = features.colwise().mean().transpose();
  const Matrix x = features.rowwise() - model.mean.transpose();
  const auto m = n - static_cast<Eigen::Index>(lag);
  Matrix c0 = (x.transpose() * x) / static_cast<double>(n);
  Matrix ct = (x.topRows(m).transpose() * x.bottomRows(m)) / static_cast<double>(m);
  ct = (0.5 * (ct + ct.transpose())).eval();

  const double reg = 1e-8 * c0.trace() / static_cast<double>(d);
  c0.diagonal().array() += reg;
  Eigen::LLT<Matrix> llt(c0);
  if (!(reg > 0.0) || llt.info() != Eigen::Success) {
    std::string names;
    for (Eigen::Index j = 0; j < d; ++j) {
      if (!(x.col(j).squaredNorm() > 0.0)) names += (names.empty() ? "" : ",") + std::to_string(j);
    }
    throw NumericalError("instantaneous covariance is singular; zero-variance features: {" + names + "}");
  }
  const Matrix l = llt.matrixL();
  const Matrix l_inv = l.triangularView<Eigen::Lower>().solve(Matrix::Identity(d, d));
  const Matrix whitened = l_inv * ct * l_inv.transpose();

  Vector lambda;
  Matrix w;
  jacobi_eigen(whitened, lambda, w);
  const Eigen::Index k = std::min<Eigen::Index>(static_cast<Eigen::Index>(n_components), d);
  model.eigenvalues = lambda.head(k);
  model.components = l_inv.transpose() * w.leftCols(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    Eigen::Index arg = 0;
    model.components.col(j).cwiseAbs().maxCoeff(&arg);
    if (model.components(arg, j) < 0.0) model.components.col(j) *= -1.0;
  }
  return model;
}

Matrix tica_project(const TicaModel& model, const Matrix& features) {
  if (features.cols() != model.mean.size()) {
    throw ShapeError("TICA projection expects " + std::to_string(model.mean.size()) + " features, got " +
                     std::to_string(features.cols()));
  }
  return (features.rowwise() - model.mean.transpose()) * model.components;
}

std::vector<int> assign_clusters(const Matrix& points, const Matrix& centers) {
  if (points.cols() != centers.cols()) throw ShapeError("points and centers differ in dimension");
  std::vector<int> labels(static_cast<std::size_t>(points.rows()));
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    Eigen::Index best = 0;
    (centers.rowwise() - points.row(i)).rowwise().squaredNorm().minCoeff(&best);
    labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return labels;
}

KMeansResult kmeans_fit(const Matrix& points, std::size_t k, Seed seed, std::size_t max_iter, double tol) {
  const Eigen::Index n = points.rows();
  if (k == 0) throw ConfigError("k-means needs k >= 1");
  if (static_cast<Eigen::Index>(k) > n) {
    throw ConfigError("k-means with k = " + std::to_string(k) + " exceeds the " + std::to_string(n) + " points");
  }
  Rng rng(seed);
  KMeansResult res;
  res.centers.resize(static_cast<Eigen::Index>(k), points.cols());
  res.centers.row(0) = points.row(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n))));
  Vector d2 = (points.rowwise() - res.centers.row(0)).rowwise().squaredNorm();
  for (Eigen::Index c = 1; c < static_cast<Eigen::Index>(k); ++c) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double r = rng.uniform() * total;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        r -= d2[i];
        if (r < 0.0 && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
      while (d2[pick] == 0.0 && pick > 0) --pick;
    } else {
      pick = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
    }
    res.centers.row(c) = points.row(pick);
    d2 = d2.cwiseMin((points.rowwise() - res.centers.row(c)).rowwise().squaredNorm());
  }

  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it < max_iter; ++it) {
    const auto labels = assign_clusters(points, res.centers);
    double inertia = 0.0;
    Matrix sums = Matrix::Zero(res.centers.rows(), points.cols());
    std::vector<std::size_t> sizes(k, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto l = static_cast<std::size_t>(labels[static_cast<std::size_t>(i)]);
      inertia += (points.row(i) - res.centers.row(static_cast<Eigen::Index>(l))).squaredNorm();
      sums.row(static_cast<Eigen::Index>(l)) += points.row(i);
      sizes[l] += 1;
    }
    res.inertia_history.push_back(inertia);
    res.iterations = it + 1;
    if (prev - inertia < tol) break;
    prev = inertia;
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] > 0) {
        res.centers.row(static_cast<Eigen::Index>(c)) =
            sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(sizes[c]);
      }
    }
  }
  return res;
}

MsmModel msm_estimate(const std::vector<int>& labels, std::size_t k, std::size_t lag) {
  if (lag == 0) throw DomainError("MSM lag must be >= 1");
  if (labels.size() <= lag) throw DomainError("MSM label sequence must be longer than the lag");
  const auto kk = static_cast<Eigen::Index>(k);
  MsmModel m;
  m.lag = lag;
  m.counts = Matrix::Zero(kk, kk);
  for (std::size_t i = 0; i + lag < labels.size(); ++i) {
    const int a = labels[i];
    const int b = labels[i + lag];
    if (a < 0 || b < 0 || a >= static_cast<int>(k) || b >= static_cast<int>(k)) {
      throw DomainError("MSM label outside [0, k)");
    }
    m.counts(a, b) += 1.0;
  }
  m.transition = m.counts;
  for (Eigen::Index i = 0; i < kk; ++i) {
    const double row = m.transition.row(i).sum();
    if (row > 0.0) {
      m.transition.row(i) /= row;
    } else {
      m.transition(i, i) = 1.0;
    }
  }
  const Matrix lazy = 0.5 * (Matrix::Identity(kk, kk) + m.transition);
  // Start from the visited-state occupancy so unvisited self-loop states keep zero mass.
  Vector pi = m.counts.rowwise().sum();
  if (pi.sum() > 0.0) pi /= pi.sum();
  for (int it = 0; it < 10'000'000; ++it) {
    Vector next = lazy.transpose() * pi;
    next /= next.sum();
    const double change = (next - pi).lpNorm<1>();
    pi = std::move(next);
    if (change < 1e-13) break;
  }
  m.stationary = pi;
  return m;
}

Vector state_occupancy(const std::vector<int>& labels, std::size_t k) {
  Vector occ = Vector::Zero(static_cast<Eigen::Index>(k));
  if (labels.empty()) return occ;
  for (int l : labels) occ[l] += 1.0;
  return occ / static_cast<double>(labels.size());
}

Decorrelation decorrelation(const Vector& series, double ref_mean, double ref_sd, double threshold,
                            std::size_t window) {
  if (!(ref_sd > 0.0)) throw DomainError("decorrelation needs a positive reference standard deviation");
  if (series.size() < 2) throw DomainError("decorrelation needs at least two frames");
  const auto n = static_cast<std::size_t>(series.size());
  const std::size_t max_lag = std::min(window, n - 1);
  const Vector c = series.array() - ref_mean;
  const double var = ref_sd * ref_sd;
  Decorrelation out;
  out.acf.resize(max_lag + 1);
  for (std::size_t l = 0; l <= max_lag; ++l) {
    const auto m = static_cast<Eigen::Index>(n - l);
    out.acf[l] = c.head(m).dot(c.segment(static_cast<Eigen::Index>(l), m)) / (static_cast<double>(m) * var);
  }
  if (out.acf[0] > threshold) {
    out.decorrelated = std::any_of(out.acf.begin(), out.acf.end(), [&](double v) { return v < threshold; });
  }
  return out;
}

FreeEnergySurface free_energy_surface(const Matrix& tics, std::size_t bins, std::optional<std::array<double, 4>> range) {
  if (tics.rows() == 0) throw DomainError("free-energy surface needs at least one point");
  if (tics.cols() < 2) throw ShapeError("free-energy surface needs two projected coordinates");
  if (bins == 0) throw ConfigError("free-energy surface needs at least one bin");
  FreeEnergySurface fes;
  fes.bins = bins;
  if (range) {
    fes.lo0 = (*range)[0];
    fes.hi0 = (*range)[1];
    fes.lo1 = (*range)[2];
    fes.hi1 = (*range)[3];
  } else {
    fes.lo0 = tics.col(0).minCoeff();
    fes.hi0 = tics.col(0).maxCoeff();
    fes.lo1 = tics.col(1).minCoeff();
    fes.hi1 = tics.col(1).maxCoeff();
  }
  const auto h0 = make_histogram(tics.col(0), fes.lo0, fes.hi0, bins);
  const auto h1 = make_histogram(tics.col(1), fes.lo1, fes.hi1, bins);
  // make_histogram may have widened a degenerate range; keep the edges it used.
  fes.lo0 = h0.edges.front();
  fes.hi0 = h0.edges.back();
  fes.lo1 = h1.edges.front();
  fes.hi1 = h1.edges.back();
  const double w0 = (fes.hi0 - fes.lo0) / static_cast<double>(bins);
  const double w1 = (fes.hi1 - fes.lo1) / static_cast<double>(bins);
  std::vector<std::size_t> counts(bins * bins, 0);
  const double top = static_cast<double>(bins - 1);
  for (Eigen::Index r = 0; r < tics.rows(); ++r) {
    const auto i = static_cast<std::size_t>(std::clamp(std::floor((tics(r, 0) - fes.lo0) / w0), 0.0, top));
    const auto j = static_cast<std::size_t>(std::clamp(std::floor((tics(r, 1) - fes.lo1) / w1), 0.0, top));
    counts[i * bins + j] += 1;
  }
  fes.values.assign(bins * bins, std::nullopt);
  const double n = static_cast<double>(tics.rows());
  for (std::size_t b = 0; b < counts.size(); ++b) {
    if (counts[b] > 0) fes.values[b] = -std::log(static_cast<double>(counts[b]) / n);
  }
  return fes;
}

}  // namespace vbridge
