#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "ltc/errors.hpp"
#include "ltc/rng.hpp"

namespace ltc {

using Vec = std::vector<double>;

// Dense row-major matrix of doubles. Deliberately minimal: the library only
// needs fills, matrix-vector products and outer-product accumulation.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

  void fill(double v) {
    for (auto& x : data) x = v;
  }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

inline bool all_finite(std::span<const double> xs) {
  for (double x : xs)
    if (!std::isfinite(x)) return false;
  return true;
}

inline bool all_finite(const Matrix& m) { return all_finite(std::span<const double>(m.data)); }

// out[c] += sum_r m(r, c) * x[r]; treats columns as output coordinates.
inline void accumulate_columns(const Matrix& m, std::span<const double> x, Vec& out) {
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double xr = x[r];
    if (xr == 0.0) continue;
    const double* row = m.data.data() + r * m.cols;
    for (std::size_t c = 0; c < m.cols; ++c) out[c] += row[c] * xr;
  }
}

// out[r] += sum_c m(r, c) * v[c]; treats rows as output coordinates.
inline void accumulate_rows(const Matrix& m, std::span<const double> v, Vec& out) {
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double* row = m.data.data() + r * m.cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < m.cols; ++c) acc += row[c] * v[c];
    out[r] += acc;
  }
}

// m(r, c) += a[r] * b[c]
inline void accumulate_outer(Matrix& m, std::span<const double> a, std::span<const double> b) {
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double ar = a[r];
    if (ar == 0.0) continue;
    double* row = m.data.data() + r * m.cols;
    for (std::size_t c = 0; c < m.cols; ++c) row[c] += ar * b[c];
  }
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// Entries i.i.d. Gaussian(mean, variance), deterministic per seed. The
// sampler is scale-affine: scaling the variance by c^2 scales every entry's
// offset from the mean by c, draw for draw.
inline Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double mean, double variance,
                              RngSeed seed) {
  if (variance < 0.0) throw ParameterError("gaussian_matrix: variance must be >= 0");
  Rng rng(seed);
  Matrix m(rows, cols);
  const double sd = std::sqrt(variance);
  for (auto& x : m.data) x = mean + sd * rng.next_gaussian();
  return m;
}

}  // namespace ltc
