#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "ltc/cell.hpp"
#include "ltc/errors.hpp"
#include "ltc/rng.hpp"
#include "ltc/solver.hpp"

namespace ltc {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Guaranteed range of the effective time constant, per neuron:
// tau / (1 + tau * w) <= tau_sys <= tau. Requires a bounded positive
// nonlinearity; w is the per-neuron scale of f's supremum (1 for the
// per-neuron sigmoid convention used here).
inline std::vector<Interval> tau_bounds(const CellParams& p, double w = 1.0) {
  validate_cell(p);
  if (p.activation != Activation::Sigmoid)
    throw ParameterError(
        "tau_bounds: guarantees hold for sigmoid activations only (bounded f in (0,1))");
  if (w < 0.0) throw ParameterError("tau_bounds: w must be >= 0");
  std::vector<Interval> out(p.n);
  for (std::size_t i = 0; i < p.n; ++i)
    out[i] = {p.tau[i] / (1.0 + p.tau[i] * w), p.tau[i]};
  return out;
}

// Guaranteed range of each neuron's state: min(0, a_i) <= x_i <= max(0, a_i).
inline std::vector<Interval> state_bounds(const CellParams& p) {
  validate_cell(p);
  if (p.activation != Activation::Sigmoid)
    throw ParameterError(
        "state_bounds: guarantees hold for sigmoid activations only (bounded f in (0,1))");
  std::vector<Interval> out(p.n);
  for (std::size_t i = 0; i < p.n; ++i)
    out[i] = {std::min(0.0, p.a_vec[i]), std::max(0.0, p.a_vec[i])};
  return out;
}

struct BoundsViolation {
  std::size_t trial = 0;
  std::size_t neuron = 0;
  double time = 0.0;
  double value = 0.0;
  double lo = 0.0, hi = 0.0;
  double margin = 0.0;  // how far outside the interval
  std::string kind;     // "state" or "tau"
};

struct BoundsReport {
  std::vector<Interval> tau_intervals, state_intervals;  // cell of the first trial
  std::size_t trials = 0;
  std::size_t samples_tested = 0;
  std::size_t solver_failures = 0;
  double max_input_magnitude = 0.0;
  double slack = 1e-9;
  std::vector<BoundsViolation> violations;

  bool pass() const { return violations.empty(); }
};

struct FuzzConfig {
  std::size_t trials = 1000;
  std::size_t steps = 200;
  std::size_t max_neurons = 16;
  std::size_t max_inputs = 3;
  double input_amp = 1e6;  // per-trial amplitudes drawn log-uniform up to this
  double slack = 1e-9;
  SolverKind solver{SolverKind::Method::Fused};
  RngSeed seed = 0;
  std::size_t max_recorded = 1000;  // cap on stored violation entries
};

using CellSampler = std::function<CellParams(Rng&, std::size_t n, std::size_t m)>;

inline CellParams default_fuzz_cell(Rng& rng, std::size_t n, std::size_t m) {
  CellParams p;
  p.n = n;
  p.m = m;
  p.activation = Activation::Sigmoid;
  p.gamma = Matrix(m, n);
  for (auto& v : p.gamma.data) v = rng.next_gaussian() / std::sqrt(static_cast<double>(m));
  p.gamma_r = Matrix(n, n);
  for (auto& v : p.gamma_r.data) v = rng.next_gaussian() / std::sqrt(static_cast<double>(n));
  p.mu.resize(n);
  for (auto& v : p.mu) v = rng.next_gaussian();
  p.tau.resize(n);
  for (auto& v : p.tau) v = std::pow(10.0, rng.uniform(-1.0, 1.0));
  p.a_vec.resize(n);
  for (auto& v : p.a_vec) v = 2.0 * rng.next_gaussian();
  return p;
}

// Simulates random cells from states inside the guaranteed box while being
// driven by inputs of up to the configured magnitude, and checks every
// visited state and every effective-time-constant evaluation against the
// guaranteed intervals. Violations are recorded, not thrown, so the
// verifier also works as a negative control on deliberately corrupted
// parameters.
inline BoundsReport fuzz_verify(const FuzzConfig& cfg,
                                const CellSampler& sampler = default_fuzz_cell) {
  if (cfg.trials < 1 || cfg.steps < 1)
    throw ParameterError("fuzz_verify: trials and steps must be >= 1");
  if (cfg.solver.method != SolverKind::Method::Fused &&
      cfg.solver.method != SolverKind::Method::Dopri45)
    throw ParameterError("fuzz_verify: use the fused or the dopri45 solver");

  BoundsReport report;
  report.trials = cfg.trials;
  report.slack = cfg.slack;

  for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
    Rng rng(Rng::derive(cfg.seed, trial));
    const std::size_t n = 1 + static_cast<std::size_t>(rng.next_below(cfg.max_neurons));
    const std::size_t m = 1 + static_cast<std::size_t>(rng.next_below(cfg.max_inputs));
    CellParams cell = sampler(rng, n, m);

    // Intervals are evaluated directly so corrupted parameters still get
    // checked rather than rejected.
    std::vector<Interval> tau_iv(cell.n), state_iv(cell.n);
    for (std::size_t i = 0; i < cell.n; ++i) {
      tau_iv[i] = {cell.tau[i] / (1.0 + cell.tau[i]), cell.tau[i]};
      state_iv[i] = {std::min(0.0, cell.a_vec[i]), std::max(0.0, cell.a_vec[i])};
    }
    if (trial == 0) {
      report.tau_intervals = tau_iv;
      report.state_intervals = state_iv;
    }

    const double amp = std::pow(10.0, rng.uniform(0.0, std::log10(std::max(cfg.input_amp, 1.0))));
    report.max_input_magnitude = std::max(report.max_input_magnitude, amp);
    const double dt = std::pow(10.0, rng.uniform(-2.0, 0.0));

    Vec x(cell.n);
    for (std::size_t i = 0; i < cell.n; ++i)
      x[i] = rng.uniform(state_iv[i].lo, state_iv[i].hi);

    auto record = [&](std::size_t neuron, double t, double value, const Interval& iv,
                      const char* kind) {
      if (report.violations.size() < cfg.max_recorded) {
        const double margin = std::max(iv.lo - value, value - iv.hi);
        report.violations.push_back({trial, neuron, t, value, iv.lo, iv.hi, margin, kind});
      }
    };

    auto check_state = [&](const Vec& xs, const Vec& input, double t) {
      ++report.samples_tested;
      for (std::size_t i = 0; i < cell.n; ++i) {
        if (xs[i] < state_iv[i].lo - cfg.slack || xs[i] > state_iv[i].hi + cfg.slack)
          record(i, t, xs[i], state_iv[i], "state");
      }
      Vec f = neural_net_f(xs, input, cell);
      for (std::size_t i = 0; i < cell.n; ++i) {
        const double den = 1.0 + cell.tau[i] * f[i];
        const double ts = cell.tau[i] / den;
        if (ts < tau_iv[i].lo - cfg.slack || ts > tau_iv[i].hi + cfg.slack)
          record(i, t, ts, tau_iv[i], "tau");
      }
    };

    try {
      Vec input(cell.m);
      for (std::size_t s = 0; s < cfg.steps; ++s) {
        for (auto& v : input) v = rng.uniform(-amp, amp);
        const double t0 = dt * static_cast<double>(s);
        if (cfg.solver.method == SolverKind::Method::Fused) {
          x = fused_step(x, input, dt, cell);
          check_state(x, input, t0 + dt);
        } else {
          auto res = dopri45_core(
              [&](double, const Vec& xs) { return ltc_derivative(xs, input, cell); }, x, 0.0, dt,
              cfg.solver.rtol, cfg.solver.atol,
              [&](double tl, const Vec& xs) { check_state(xs, input, t0 + tl); });
          x = std::move(res.state);
        }
      }
    } catch (const Error&) {
      ++report.solver_failures;
    }
  }
  return report;
}

}  // namespace ltc
