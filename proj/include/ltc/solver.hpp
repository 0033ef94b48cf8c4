#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ltc/cell.hpp"
#include "ltc/errors.hpp"
#include "ltc/matrix.hpp"

namespace ltc {

struct SolverKind {
  enum class Method { Euler, Rk4, Dopri45, Fused };
  Method method = Method::Fused;
  double rtol = 1e-3;  // dopri45 only
  double atol = 1e-6;  // dopri45 only

  bool fixed_step() const { return method != Method::Dopri45; }
};

inline std::string to_string(SolverKind::Method m) {
  switch (m) {
    case SolverKind::Method::Euler: return "euler";
    case SolverKind::Method::Rk4: return "rk4";
    case SolverKind::Method::Dopri45: return "dopri45";
    case SolverKind::Method::Fused: return "fused";
  }
  return "?";
}

inline SolverKind::Method solver_method_from_string(const std::string& name) {
  if (name == "euler") return SolverKind::Method::Euler;
  if (name == "rk4") return SolverKind::Method::Rk4;
  if (name == "dopri45") return SolverKind::Method::Dopri45;
  if (name == "fused") return SolverKind::Method::Fused;
  throw ParameterError("unknown solver: " + name);
}

namespace detail {

inline void check_finite_state(const Vec& x, const char* where) {
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i]))
      throw OverflowError(std::string(where) + ": non-finite value at coordinate " +
                              std::to_string(i),
                          i);
}

}  // namespace detail

// One explicit Euler update x + dt * f(x, I).
template <class Deriv>
Vec euler_step(Deriv&& deriv, const Vec& x, const Vec& input, double dt) {
  if (dt < 0.0) throw ParameterError("euler_step: dt must be >= 0");
  Vec d = deriv(x, input);
  Vec y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + dt * d[i];
  detail::check_finite_state(y, "euler_step");
  return y;
}

// Classical 4-stage Runge-Kutta update; the input is held constant across
// the stages.
template <class Deriv>
Vec rk4_step(Deriv&& deriv, const Vec& x, const Vec& input, double dt) {
  if (dt < 0.0) throw ParameterError("rk4_step: dt must be >= 0");
  const std::size_t n = x.size();
  Vec k1 = deriv(x, input);
  Vec xs(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = x[i] + 0.5 * dt * k1[i];
  Vec k2 = deriv(xs, input);
  for (std::size_t i = 0; i < n; ++i) xs[i] = x[i] + 0.5 * dt * k2[i];
  Vec k3 = deriv(xs, input);
  for (std::size_t i = 0; i < n; ++i) xs[i] = x[i] + dt * k3[i];
  Vec k4 = deriv(xs, input);
  Vec y(n);
  for (std::size_t i = 0; i < n; ++i)
    y[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  detail::check_finite_state(y, "rk4_step");
  return y;
}

// Semi-implicit update for the liquid cell: state occurrences that enter the
// right-hand side linearly are taken at t+dt, which gives the closed form
//   x' = (x + dt * f . a) / (1 + dt * (1/tau + f)).
// Unconditionally stable for f >= 0; with dt = 0 it returns x exactly.
inline Vec fused_step(const Vec& x, const Vec& input, double dt, const CellParams& p) {
  if (dt < 0.0) throw ParameterError("fused_step: dt must be >= 0");
  check_shapes(p, x, input);
  Vec f = neural_net_f(x, input, p);
  Vec y(p.n);
  for (std::size_t i = 0; i < p.n; ++i) {
    const double den = 1.0 + dt * (1.0 / p.tau[i] + f[i]);
    if (den <= 1e-9)
      throw SingularityError(
          "fused_step: update denominator <= 1e-9 at coordinate " + std::to_string(i) +
              " (possible only for signed activations)",
          i);
    y[i] = (x[i] + dt * f[i] * p.a_vec[i]) / den;
  }
  detail::check_finite_state(y, "fused_step");
  return y;
}

struct Dopri45Result {
  Vec state;
  std::size_t accepted_steps = 0;
};

// Embedded Dormand-Prince 4(5) pair with PI step-size control.
// deriv: Vec(double t, const Vec& x). on_accept: void(double t, const Vec& x).
template <class DerivT, class AcceptFn>
Dopri45Result dopri45_core(DerivT&& deriv, Vec x, double t0, double t1, double rtol, double atol,
                           AcceptFn&& on_accept) {
  if (!(rtol > 0.0) || !(atol > 0.0))
    throw ParameterError("dopri45: rtol and atol must be positive");
  if (!std::isfinite(t0) || !std::isfinite(t1) || t1 < t0)
    throw ParameterError("dopri45: invalid time span");
  const double span = t1 - t0;
  Dopri45Result result{std::move(x), 0};
  if (span == 0.0) return result;

  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // difference between the 5th and the embedded 4th order weights
  static constexpr double e1 = b1 - 5179.0 / 57600, e3 = b3 - 7571.0 / 16695,
                          e4 = b4 - 393.0 / 640, e5 = b5 + 92097.0 / 339200,
                          e6 = b6 - 187.0 / 2100, e7 = -1.0 / 40;

  const std::size_t n = result.state.size();
  const double h_min = 1e-12 * span;
  double h = span / 100.0;
  double t = t0;
  double err_old = 1e-4;
  Vec& y = result.state;
  Vec ys(n), ynew(n);

  while (t < t1) {
    if (t1 - t <= span * 1e-14) break;
    h = std::min(h, t1 - t);

    Vec k1 = deriv(t, y);
    for (std::size_t i = 0; i < n; ++i) ys[i] = y[i] + h * a21 * k1[i];
    Vec k2 = deriv(t + c2 * h, ys);
    for (std::size_t i = 0; i < n; ++i) ys[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    Vec k3 = deriv(t + c3 * h, ys);
    for (std::size_t i = 0; i < n; ++i)
      ys[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    Vec k4 = deriv(t + c4 * h, ys);
    for (std::size_t i = 0; i < n; ++i)
      ys[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    Vec k5 = deriv(t + c5 * h, ys);
    for (std::size_t i = 0; i < n; ++i)
      ys[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    Vec k6 = deriv(t + h, ys);
    for (std::size_t i = 0; i < n; ++i)
      ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    Vec k7 = deriv(t + h, ynew);

    // per-component error control: every coordinate must meet its own scale
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                            e7 * k7[i]);
      const double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      const double r = std::abs(e) / sc;
      if (!std::isfinite(r) || !std::isfinite(ynew[i])) {
        err = std::numeric_limits<double>::infinity();
        break;
      }
      err = std::max(err, r);
    }

    if (err <= 1.0) {
      t += h;
      y = ynew;
      ++result.accepted_steps;
      on_accept(t, y);
      const double e = std::max(err, 1e-10);
      double fac = 0.9 * std::pow(e, -0.17) * std::pow(err_old, 0.04);
      err_old = std::max(err, 1e-4);
      h *= std::clamp(fac, 0.2, 5.0);
    } else {
      double fac = std::isfinite(err) ? 0.9 * std::pow(err, -0.2) : 0.1;
      h *= std::clamp(fac, 0.1, 1.0);
      if (h < h_min)
        throw StiffnessError(
            "dopri45: step size underflow at t = " + std::to_string(t) +
            "; the system is too stiff for an explicit Runge-Kutta pair (it would need an "
            "impractical number of steps). Use the fused semi-implicit solver instead.");
    }
  }
  return result;
}

// Integrate dx/dt = deriv(x, input) over t_span with the input held constant.
template <class Deriv>
Dopri45Result dopri45_integrate(Deriv&& deriv, const Vec& x0, const Vec& input,
                                std::pair<double, double> t_span, double rtol, double atol) {
  return dopri45_core([&](double, const Vec& x) { return deriv(x, input); }, x0, t_span.first,
                      t_span.second, rtol, atol, [](double, const Vec&) {});
}

// A stack of cells: layer 0 is driven by the external input, layer l by the
// state of layer l-1. A single cell is a stack of depth 1.
struct StackedCell {
  CellKind kind = CellKind::Ltc;
  std::vector<CellParams> layers;

  std::size_t state_size() const {
    std::size_t total = 0;
    for (const auto& l : layers) total += l.n;
    return total;
  }
};

inline void validate_stack(const StackedCell& s) {
  if (s.layers.empty()) throw ParameterError("stack: needs at least one layer");
  for (std::size_t l = 0; l < s.layers.size(); ++l) {
    validate_cell(s.layers[l]);
    if (l > 0 && s.layers[l].m != s.layers[l - 1].n)
      throw ParameterError("stack: layer " + std::to_string(l) +
                           " input dim must equal previous layer width");
  }
}

inline Vec stacked_derivative(const StackedCell& s, const Vec& x, const Vec& input) {
  Vec out(x.size());
  std::span<const double> prev(input);
  std::size_t off = 0;
  for (const auto& layer : s.layers) {
    std::span<const double> xl(x.data() + off, layer.n);
    Vec d = cell_derivative(s.kind, xl, prev, layer);
    std::copy(d.begin(), d.end(), out.begin() + off);
    prev = xl;
    off += layer.n;
  }
  return out;
}

inline Vec stacked_fused_step(const StackedCell& s, const Vec& x, const Vec& input, double dt) {
  Vec out(x.size());
  std::span<const double> prev(input);
  std::size_t off = 0;
  for (const auto& layer : s.layers) {
    Vec xl(x.begin() + off, x.begin() + off + layer.n);
    Vec il(prev.begin(), prev.end());
    Vec y = fused_step(xl, il, dt, layer);
    std::copy(y.begin(), y.end(), out.begin() + off);
    prev = std::span<const double>(x.data() + off, layer.n);
    off += layer.n;
  }
  return out;
}

// Time-indexed record of a simulation. states[0] is the initial state;
// sample_offsets[i] indexes the state reached after input sample i-1
// (sample_offsets[0] == 0).
struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<std::size_t> steps_taken;
  std::vector<std::size_t> sample_offsets;

  // One row per input sample: the state after consuming that sample.
  Matrix states_per_sample() const {
    const std::size_t samples = sample_offsets.empty() ? 0 : sample_offsets.size() - 1;
    const std::size_t n = states.empty() ? 0 : states[0].size();
    Matrix m(samples, n);
    for (std::size_t i = 0; i < samples; ++i) {
      const Vec& s = states[sample_offsets[i + 1]];
      std::copy(s.begin(), s.end(), m.row(i).begin());
    }
    return m;
  }
};

namespace detail {

[[noreturn]] inline void rethrow_at_sample(const Error& e, std::size_t sample) {
  const std::string msg = std::string(e.what()) + " [input sample " + std::to_string(sample) + "]";
  if (auto* p = dynamic_cast<const SingularityError*>(&e)) throw SingularityError(msg, p->coordinate);
  if (auto* p = dynamic_cast<const OverflowError*>(&e)) throw OverflowError(msg, p->coordinate);
  if (dynamic_cast<const StiffnessError*>(&e)) throw StiffnessError(msg);
  if (dynamic_cast<const ParameterError*>(&e)) throw ParameterError(msg);
  throw Error(msg);
}

}  // namespace detail

// Advance the stack through the input sequence. Every sample is integrated
// over a span of L * dt with the input held constant; fixed-step methods
// take L sub-steps of size dt, each sub-step starting from the previous
// sub-step's output. All intermediate states are recorded.
inline Trajectory simulate_stack(const StackedCell& stack, const SolverKind& solver, const Vec& x0,
                                 const std::vector<Vec>& inputs, double dt, std::size_t L) {
  validate_stack(stack);
  if (L < 1) throw ParameterError("simulate: L must be >= 1");
  if (!(dt > 0.0)) throw ParameterError("simulate: dt must be > 0");
  if (x0.size() != stack.state_size())
    throw ParameterError("simulate: x0 length must equal total stack width");
  if (solver.method == SolverKind::Method::Fused && stack.kind != CellKind::Ltc)
    throw ParameterError("simulate: the fused solver applies only to ltc cells");
  const std::size_t in_dim = stack.layers.front().m;

  Trajectory traj;
  traj.times.push_back(0.0);
  traj.states.push_back(x0);
  traj.sample_offsets.push_back(0);

  Vec x = x0;
  const double sample_span = dt * static_cast<double>(L);
  for (std::size_t s = 0; s < inputs.size(); ++s) {
    const Vec& input = inputs[s];
    if (input.size() != in_dim)
      throw ParameterError("simulate: input sample " + std::to_string(s) + " has wrong length");
    const double t_base = sample_span * static_cast<double>(s);
    try {
      switch (solver.method) {
        case SolverKind::Method::Euler:
        case SolverKind::Method::Rk4:
        case SolverKind::Method::Fused: {
          for (std::size_t l = 0; l < L; ++l) {
            if (solver.method == SolverKind::Method::Euler)
              x = euler_step([&](const Vec& xs, const Vec& is) { return stacked_derivative(stack, xs, is); },
                             x, input, dt);
            else if (solver.method == SolverKind::Method::Rk4)
              x = rk4_step([&](const Vec& xs, const Vec& is) { return stacked_derivative(stack, xs, is); },
                           x, input, dt);
            else
              x = stacked_fused_step(stack, x, input, dt);
            traj.times.push_back(t_base + dt * static_cast<double>(l + 1));
            traj.states.push_back(x);
          }
          traj.steps_taken.push_back(L);
          break;
        }
        case SolverKind::Method::Dopri45: {
          auto res = dopri45_core(
              [&](double, const Vec& xs) { return stacked_derivative(stack, xs, input); }, x, 0.0,
              sample_span, solver.rtol, solver.atol, [&](double tl, const Vec& xs) {
                traj.times.push_back(t_base + tl);
                traj.states.push_back(xs);
              });
          x = std::move(res.state);
          if (traj.states.back() != x) {  // span guard: record the endpoint once
            traj.times.push_back(t_base + sample_span);
            traj.states.push_back(x);
          }
          traj.steps_taken.push_back(std::max<std::size_t>(res.accepted_steps, 1));
          break;
        }
      }
    } catch (const Error& e) {
      detail::rethrow_at_sample(e, s);
    }
    traj.sample_offsets.push_back(traj.states.size() - 1);
  }
  return traj;
}

inline Trajectory simulate(CellKind kind, const CellParams& params, const SolverKind& solver,
                           const Vec& x0, const std::vector<Vec>& inputs, double dt,
                           std::size_t L) {
  StackedCell stack{kind, {params}};
  return simulate_stack(stack, solver, x0, inputs, dt, L);
}

struct DepthConfig {
  std::size_t width = 100;
  std::size_t layers = 1;
  Activation activation = Activation::HardTanh;
  double sw2 = 2.0;
  double sb2 = 1.0;
  std::size_t trials = 100;
  RngSeed seed = 0;
};

struct DepthResult {
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t failures = 0;        // trials aborted by stiffness, excluded
  std::vector<double> per_trial;   // successful trials only
};

// Average number of accepted adaptive-solver steps per incoming input
// sample, over fresh random parameter draws. The whole sequence span is
// integrated in one run (the input is a zero-order hold), so slow dynamics
// can average below one step per sample.
inline DepthResult computational_depth(CellKind kind, const DepthConfig& cfg,
                                       const std::vector<Vec>& inputs, double input_dt,
                                       const SolverKind& solver) {
  if (solver.method != SolverKind::Method::Dopri45)
    throw ParameterError("computational_depth: defined for adaptive solvers only");
  if (cfg.trials < 1) throw ParameterError("computational_depth: trials must be >= 1");
  if (inputs.empty()) throw ParameterError("computational_depth: needs at least one input sample");
  if (!(input_dt > 0.0)) throw ParameterError("computational_depth: input_dt must be > 0");

  const std::size_t T = inputs.size();
  const std::size_t in_dim = inputs.front().size();
  const double t_end = input_dt * static_cast<double>(T);

  DepthResult result;
  for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
    Rng rng(Rng::derive(cfg.seed, trial));
    StackedCell stack{kind, {}};
    for (std::size_t l = 0; l < cfg.layers; ++l)
      stack.layers.push_back(sample_measurement_cell(
          kind, cfg.width, l == 0 ? in_dim : cfg.width, cfg.activation, cfg.sw2, cfg.sb2, rng));
    Vec x0(stack.state_size(), 0.0);
    auto input_at = [&](double t) -> const Vec& {
      auto idx = static_cast<std::size_t>(std::max(0.0, t / input_dt));
      return inputs[std::min(idx, T - 1)];
    };
    try {
      auto res = dopri45_core(
          [&](double t, const Vec& x) { return stacked_derivative(stack, x, input_at(t)); }, x0,
          0.0, t_end, solver.rtol, solver.atol, [](double, const Vec&) {});
      result.per_trial.push_back(static_cast<double>(res.accepted_steps) /
                                 static_cast<double>(T));
    } catch (const StiffnessError&) {
      ++result.failures;
    } catch (const OverflowError&) {
      ++result.failures;
    }
  }

  const std::size_t k = result.per_trial.size();
  if (k > 0) {
    double sum = 0.0;
    for (double d : result.per_trial) sum += d;
    result.mean = sum / static_cast<double>(k);
    if (k > 1) {
      double ss = 0.0;
      for (double d : result.per_trial) ss += (d - result.mean) * (d - result.mean);
      result.stddev = std::sqrt(ss / static_cast<double>(k - 1));
    }
  }
  return result;
}

}  // namespace ltc
