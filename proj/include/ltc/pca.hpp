#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>

#include "ltc/errors.hpp"
#include "ltc/matrix.hpp"
#include "ltc/polyline.hpp"

namespace ltc {

namespace detail {

// Cyclic Jacobi eigendecomposition of a symmetric matrix. a is reduced
// towards diagonal form in place, v accumulates the eigenvectors as columns.
inline void jacobi_eigen(Matrix& a, Matrix& v) {
  const std::size_t n = a.rows;
  v = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(a(i, i)));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) scale = std::max(scale, std::abs(a(i, j)));
  if (scale == 0.0) return;

  const int max_sweeps = 64;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (off <= n * n * scale * scale * 1e-30) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= scale * 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
}

}  // namespace detail

struct PcaResult {
  Polyline2D projection;                         // one point per observation
  std::array<double, 2> variance_explained{0, 0};
};

// Projection of mean-centered rows onto the two leading principal axes of
// the sample covariance. Rank-deficient input is not an error: missing
// components come back as zeros with zero variance explained. Each axis is
// oriented so its largest-magnitude loading is positive, which makes the
// output deterministic up to that convention.
inline PcaResult pca_top2(const Matrix& samples) {
  const std::size_t obs = samples.rows, dims = samples.cols;
  if (obs < 2 || dims < 2)
    throw ParameterError("pca_top2: need at least 2 observations and 2 dimensions");
  if (!all_finite(samples)) throw ParameterError("pca_top2: non-finite entry");

  Vec mean(dims, 0.0);
  for (std::size_t i = 0; i < obs; ++i)
    for (std::size_t j = 0; j < dims; ++j) mean[j] += samples(i, j);
  for (auto& m : mean) m /= static_cast<double>(obs);

  Matrix centered(obs, dims);
  for (std::size_t i = 0; i < obs; ++i)
    for (std::size_t j = 0; j < dims; ++j) centered(i, j) = samples(i, j) - mean[j];

  Matrix cov(dims, dims);
  for (std::size_t i = 0; i < obs; ++i)
    for (std::size_t j = 0; j < dims; ++j) {
      const double cij = centered(i, j);
      if (cij == 0.0) continue;
      for (std::size_t k = j; k < dims; ++k) cov(j, k) += cij * centered(i, k);
    }
  const double denom = static_cast<double>(obs - 1);
  for (std::size_t j = 0; j < dims; ++j)
    for (std::size_t k = j; k < dims; ++k) {
      cov(j, k) /= denom;
      cov(k, j) = cov(j, k);
    }

  Matrix diag = cov, vectors;
  detail::jacobi_eigen(diag, vectors);

  Vec eigenvalues(dims);
  for (std::size_t i = 0; i < dims; ++i) eigenvalues[i] = std::max(diag(i, i), 0.0);

  std::vector<std::size_t> order(dims);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return eigenvalues[a] > eigenvalues[b]; });

  const double total = std::accumulate(eigenvalues.begin(), eigenvalues.end(), 0.0);

  PcaResult result;
  result.projection.points.resize(obs);
  if (total <= 0.0) return result;  // all rows identical: zero projection

  const double lead = eigenvalues[order[0]];
  std::array<Vec, 2> axes;
  std::array<double, 2> lambda{0.0, 0.0};
  for (int c = 0; c < 2; ++c) {
    const std::size_t idx = order[c];
    // Components below numerical rank are reported as zero, not noise.
    if (eigenvalues[idx] <= lead * 1e-12) break;
    lambda[c] = eigenvalues[idx];
    Vec axis(dims);
    double biggest = 0.0;
    for (std::size_t j = 0; j < dims; ++j) {
      axis[j] = vectors(j, idx);
      if (std::abs(axis[j]) > std::abs(biggest)) biggest = axis[j];
    }
    if (biggest < 0.0)
      for (auto& x : axis) x = -x;
    axes[c] = std::move(axis);
  }

  result.variance_explained = {lambda[0] / total, lambda[1] / total};
  for (std::size_t i = 0; i < obs; ++i) {
    Vec2 p;
    if (!axes[0].empty()) p.x = dot(centered.row(i), axes[0]);
    if (!axes[1].empty()) p.y = dot(centered.row(i), axes[1]);
    result.projection.points[i] = p;
  }
  return result;
}

}  // namespace ltc
