#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "ltc/activation.hpp"
#include "ltc/errors.hpp"
#include "ltc/matrix.hpp"
#include "ltc/rng.hpp"

namespace ltc {

enum class CellKind { NeuralOde, CtRnn, Ltc };

inline std::string to_string(CellKind kind) {
  switch (kind) {
    case CellKind::NeuralOde: return "node";
    case CellKind::CtRnn: return "ctrnn";
    case CellKind::Ltc: return "ltc";
  }
  return "?";
}

inline CellKind cell_kind_from_string(const std::string& name) {
  if (name == "node" || name == "neural-ode") return CellKind::NeuralOde;
  if (name == "ctrnn" || name == "ct-rnn") return CellKind::CtRnn;
  if (name == "ltc") return CellKind::Ltc;
  throw ParameterError("unknown model kind: " + name);
}

// Parameters of one continuous-time cell with n neurons and m inputs.
// gamma maps inputs to neurons (m x n), gamma_r is recurrent (n x n,
// entry (j, i) feeds neuron j into neuron i). tau is the per-neuron
// time constant and a_vec anchors the reachable state interval.
struct CellParams {
  std::size_t n = 0;
  std::size_t m = 0;
  Vec tau;
  Matrix gamma;
  Matrix gamma_r;
  Vec mu;
  Vec a_vec;
  Activation activation = Activation::Tanh;
};

inline void validate_cell(const CellParams& p) {
  if (p.n == 0) throw ParameterError("cell: n must be >= 1");
  if (p.tau.size() != p.n || p.mu.size() != p.n || p.a_vec.size() != p.n)
    throw ParameterError("cell: per-neuron vectors must have length n");
  if (p.gamma.rows != p.m || p.gamma.cols != p.n)
    throw ParameterError("cell: gamma must be m x n");
  if (p.gamma_r.rows != p.n || p.gamma_r.cols != p.n)
    throw ParameterError("cell: gamma_r must be n x n");
  for (double t : p.tau)
    if (!(t > 0.0)) throw ParameterError("cell: tau entries must be strictly positive");
  if (!all_finite(p.tau) || !all_finite(p.mu) || !all_finite(p.a_vec) || !all_finite(p.gamma) ||
      !all_finite(p.gamma_r))
    throw ParameterError("cell: non-finite parameter entry");
}

inline void check_shapes(const CellParams& p, std::span<const double> x,
                         std::span<const double> input) {
  if (x.size() != p.n) throw ParameterError("cell: state length must equal n");
  if (input.size() != p.m) throw ParameterError("cell: input length must equal m");
}

// u = gamma_r^T x + gamma^T I + mu
inline void preactivation(const CellParams& p, std::span<const double> x,
                          std::span<const double> input, Vec& out) {
  out.assign(p.n, 0.0);
  accumulate_columns(p.gamma_r, x, out);
  accumulate_columns(p.gamma, input, out);
  for (std::size_t i = 0; i < p.n; ++i) out[i] += p.mu[i];
}

inline Vec neural_net_f(std::span<const double> x, std::span<const double> input,
                        const CellParams& p) {
  check_shapes(p, x, input);
  Vec u;
  preactivation(p, x, input, u);
  for (auto& v : u) v = activate(p.activation, v);
  return u;
}

// dx/dt = f(x, I)
inline Vec node_derivative(std::span<const double> x, std::span<const double> input,
                           const CellParams& p) {
  return neural_net_f(x, input, p);
}

// dx/dt = -x/tau + f(x, I)
inline Vec ctrnn_derivative(std::span<const double> x, std::span<const double> input,
                            const CellParams& p) {
  Vec f = neural_net_f(x, input, p);
  for (std::size_t i = 0; i < p.n; ++i) {
    if (!(p.tau[i] > 0.0)) throw ParameterError("ctrnn_derivative: tau must be positive");
    f[i] -= x[i] / p.tau[i];
  }
  return f;
}

// dx/dt = -(1/tau + f) * x + f * a, element-wise
inline Vec ltc_derivative(std::span<const double> x, std::span<const double> input,
                          const CellParams& p) {
  Vec f = neural_net_f(x, input, p);
  for (std::size_t i = 0; i < p.n; ++i) {
    if (!(p.tau[i] > 0.0)) throw ParameterError("ltc_derivative: tau must be positive");
    f[i] = -(1.0 / p.tau[i] + f[i]) * x[i] + f[i] * p.a_vec[i];
  }
  return f;
}

inline Vec cell_derivative(CellKind kind, std::span<const double> x,
                           std::span<const double> input, const CellParams& p) {
  switch (kind) {
    case CellKind::NeuralOde: return node_derivative(x, input, p);
    case CellKind::CtRnn: return ctrnn_derivative(x, input, p);
    case CellKind::Ltc: return ltc_derivative(x, input, p);
  }
  throw ParameterError("cell_derivative: unknown kind");
}

// Effective time constant tau / (1 + tau * f). Meaningful for activations
// with f >= 0; for signed activations the denominator must stay positive.
inline Vec instantaneous_time_constant(std::span<const double> x, std::span<const double> input,
                                       const CellParams& p) {
  Vec f = neural_net_f(x, input, p);
  for (std::size_t i = 0; i < p.n; ++i) {
    if (!(p.tau[i] > 0.0)) throw ParameterError("instantaneous_time_constant: tau must be positive");
    const double den = 1.0 + p.tau[i] * f[i];
    if (den <= 0.0)
      throw SingularityError("instantaneous_time_constant: 1 + tau*f is not positive", i);
    f[i] = p.tau[i] / den;
  }
  return f;
}

// Random cell with the width-k profile used by the measurement sweeps:
// weights ~ N(0, sw2/k), biases ~ N(0, sb2), 1/tau folded-normal |N(0, sb2)|
// and state anchors ~ N(0, sw2). Draws are consumed in a fixed order
// regardless of kind, so the same stream yields cells sharing f across the
// three model families.
inline CellParams sample_measurement_cell(CellKind kind, std::size_t k, std::size_t m,
                                          Activation act, double sw2, double sb2, Rng& rng) {
  if (k == 0 || m == 0) throw ParameterError("sample_measurement_cell: k and m must be >= 1");
  if (sw2 < 0.0 || sb2 < 0.0) throw ParameterError("sample_measurement_cell: variances must be >= 0");
  CellParams p;
  p.n = k;
  p.m = m;
  p.activation = act;
  const double wsd = std::sqrt(sw2 / static_cast<double>(k));
  p.gamma = Matrix(m, k);
  for (auto& v : p.gamma.data) v = wsd * rng.next_gaussian();
  p.gamma_r = Matrix(k, k);
  for (auto& v : p.gamma_r.data) v = wsd * rng.next_gaussian();
  p.mu.resize(k);
  const double bsd = std::sqrt(sb2);
  for (auto& v : p.mu) v = bsd * rng.next_gaussian();
  p.tau.assign(k, 1.0);
  for (auto& t : p.tau) {
    const double inv = std::max(std::abs(bsd * rng.next_gaussian()), 1e-9);
    t = 1.0 / inv;
  }
  p.a_vec.resize(k);
  const double asd = std::sqrt(sw2);
  for (auto& v : p.a_vec) v = asd * rng.next_gaussian();
  if (kind == CellKind::NeuralOde) {
    p.tau.assign(k, 1.0);
    p.a_vec.assign(k, 0.0);
  } else if (kind == CellKind::CtRnn) {
    p.a_vec.assign(k, 0.0);
  }
  return p;
}

// Initialization used for training: weights ~ N(0, 1/fan-in), zero biases,
// tau uniform in [0.5, 2], anchors ~ N(0, 1). Keeps f near its linear
// region and the effective time constant well conditioned.
inline CellParams init_training_cell(CellKind kind, std::size_t n, std::size_t m, Activation act,
                                     Rng& rng) {
  if (n == 0 || m == 0) throw ParameterError("init_training_cell: n and m must be >= 1");
  CellParams p;
  p.n = n;
  p.m = m;
  p.activation = act;
  p.gamma = Matrix(m, n);
  const double gsd = 1.0 / std::sqrt(static_cast<double>(m));
  for (auto& v : p.gamma.data) v = gsd * rng.next_gaussian();
  p.gamma_r = Matrix(n, n);
  const double rsd = 1.0 / std::sqrt(static_cast<double>(n));
  for (auto& v : p.gamma_r.data) v = rsd * rng.next_gaussian();
  p.mu.assign(n, 0.0);
  p.tau.resize(n);
  for (auto& t : p.tau) t = rng.uniform(0.5, 2.0);
  p.a_vec.resize(n);
  for (auto& v : p.a_vec) v = rng.next_gaussian();
  if (kind == CellKind::NeuralOde) p.a_vec.assign(n, 0.0);
  if (kind == CellKind::CtRnn) p.a_vec.assign(n, 0.0);
  return p;
}

}  // namespace ltc
