#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ltc/cell.hpp"
#include "ltc/errors.hpp"
#include "ltc/loss.hpp"
#include "ltc/matrix.hpp"
#include "ltc/rng.hpp"
#include "ltc/solver.hpp"

namespace ltc {

// Linear readout y = w_out^T x + b_out. w_out is n x outputs.
struct OutputHead {
  Matrix w_out;
  Vec b_out;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

enum class OptimizerKind { Adam, Sgd };

struct TrainingConfig {
  std::size_t hidden_units = 32;
  std::size_t minibatch = 16;
  double learning_rate = 0.01;
  std::size_t solver_substeps = 6;  // L
  std::size_t bptt_length = 32;
  std::size_t epochs = 200;
  AdamConfig adam;
  LossKind loss = LossKind::Mse;
  Vec class_weights;
  RngSeed seed = 0;
  double sample_period = 1.0;  // solver step dt = sample_period / solver_substeps
  SolverKind::Method solver = SolverKind::Method::Fused;
  OptimizerKind optimizer = OptimizerKind::Adam;
  double grad_clip = 10.0;
  Activation activation = Activation::Sigmoid;
  std::size_t outputs = 0;  // 0: inferred from the targets

  double dt() const { return sample_period / static_cast<double>(solver_substeps); }
};

struct Window {
  Matrix inputs;   // T x m
  Matrix targets;  // T x target_dim (values for mse, labels for cross-entropy)
};

// Gradient (or moment) storage shaped like CellParams + OutputHead.
struct ParamGrads {
  Vec tau, mu, a;
  Matrix gamma, gamma_r, w_out;
  Vec b_out;

  static ParamGrads zeros_like(const CellParams& p, const OutputHead& h) {
    ParamGrads g;
    g.tau.assign(p.n, 0.0);
    g.mu.assign(p.n, 0.0);
    g.a.assign(p.n, 0.0);
    g.gamma = Matrix(p.gamma.rows, p.gamma.cols);
    g.gamma_r = Matrix(p.gamma_r.rows, p.gamma_r.cols);
    g.w_out = Matrix(h.w_out.rows, h.w_out.cols);
    g.b_out.assign(h.b_out.size(), 0.0);
    return g;
  }

  template <class F>
  void for_each(F&& f) {
    f(tau);
    f(mu);
    f(a);
    f(gamma.data);
    f(gamma_r.data);
    f(w_out.data);
    f(b_out);
  }

  bool finite() const {
    return all_finite(tau) && all_finite(mu) && all_finite(a) && all_finite(gamma) &&
           all_finite(gamma_r) && all_finite(w_out) && all_finite(b_out);
  }

  double global_norm() const {
    double acc = dot(tau, tau) + dot(mu, mu) + dot(a, a) + dot(gamma.data, gamma.data) +
                 dot(gamma_r.data, gamma_r.data) + dot(w_out.data, w_out.data) +
                 dot(b_out, b_out);
    return std::sqrt(acc);
  }

  void scale(double s) {
    for_each([s](Vec& v) {
      for (auto& x : v) x *= s;
    });
  }
};

// Forward pass through the unrolled solver. Holds every sub-step state so
// the reverse pass can rebuild the exact computation; memory grows as
// L x T per sequence.
struct ForwardCache {
  CellKind kind = CellKind::Ltc;
  SolverKind::Method solver = SolverKind::Method::Fused;
  double dt = 0.0;
  std::size_t L = 0, n = 0, m = 0, outputs = 0;
  std::vector<std::vector<Vec>> states;  // per window: T*L + 1 states
  std::vector<Matrix> predictions;       // per window: T x outputs
};

namespace detail {

inline Vec fixed_step(SolverKind::Method method, CellKind kind, const CellParams& p, const Vec& x,
                      const Vec& input, double dt) {
  switch (method) {
    case SolverKind::Method::Euler:
      return euler_step([&](const Vec& xs, const Vec& is) { return cell_derivative(kind, xs, is, p); },
                        x, input, dt);
    case SolverKind::Method::Rk4:
      return rk4_step([&](const Vec& xs, const Vec& is) { return cell_derivative(kind, xs, is, p); },
                      x, input, dt);
    case SolverKind::Method::Fused:
      return fused_step(x, input, dt, p);
    default:
      throw ParameterError("training unrolls fixed-step solvers only");
  }
}

inline void readout(const OutputHead& head, const Vec& x, std::span<double> out) {
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = head.b_out[c];
  for (std::size_t i = 0; i < head.w_out.rows; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    for (std::size_t c = 0; c < head.w_out.cols; ++c) out[c] += head.w_out(i, c) * xi;
  }
}

}  // namespace detail

inline ForwardCache forward_unroll(CellKind kind, const CellParams& p, const OutputHead& head,
                                   SolverKind::Method solver, std::span<const Window> batch,
                                   std::size_t L, double dt) {
  validate_cell(p);
  if (L < 1) throw ParameterError("forward_unroll: L must be >= 1");
  if (!(dt > 0.0)) throw ParameterError("forward_unroll: dt must be > 0");
  if (solver == SolverKind::Method::Dopri45)
    throw ParameterError("forward_unroll: training unrolls fixed-step solvers only");
  if (solver == SolverKind::Method::Fused && kind != CellKind::Ltc)
    throw ParameterError("forward_unroll: the fused solver applies only to ltc cells");
  if (head.w_out.rows != p.n || head.w_out.cols != head.b_out.size())
    throw ParameterError("forward_unroll: output head shape mismatch");

  ForwardCache cache;
  cache.kind = kind;
  cache.solver = solver;
  cache.dt = dt;
  cache.L = L;
  cache.n = p.n;
  cache.m = p.m;
  cache.outputs = head.b_out.size();
  cache.states.reserve(batch.size());
  cache.predictions.reserve(batch.size());

  for (const Window& w : batch) {
    if (w.inputs.cols != p.m) throw ParameterError("forward_unroll: window input width mismatch");
    const std::size_t T = w.inputs.rows;
    std::vector<Vec> states;
    states.reserve(T * L + 1);
    Vec x(p.n, 0.0);
    states.push_back(x);
    Matrix preds(T, cache.outputs);
    Vec input(p.m);
    for (std::size_t t = 0; t < T; ++t) {
      auto row = w.inputs.row(t);
      input.assign(row.begin(), row.end());
      for (std::size_t l = 0; l < L; ++l) {
        x = detail::fixed_step(solver, kind, p, x, input, dt);
        states.push_back(x);
      }
      detail::readout(head, x, preds.row(t));
    }
    cache.states.push_back(std::move(states));
    cache.predictions.push_back(std::move(preds));
  }
  return cache;
}

namespace detail {

// Cotangent of the cell derivative field: given v = dL/d(dx/dt) at (x, I),
// accumulate dL/dx into dx and dL/dparams into g.
inline void cell_derivative_vjp(CellKind kind, const CellParams& p, const Vec& x, const Vec& input,
                                const Vec& v, Vec& dx, ParamGrads& g) {
  const std::size_t n = p.n;
  Vec u;
  preactivation(p, x, input, u);

  Vec df(n);
  switch (kind) {
    case CellKind::NeuralOde:
      df = v;
      break;
    case CellKind::CtRnn:
      for (std::size_t i = 0; i < n; ++i) {
        dx[i] += -v[i] / p.tau[i];
        g.tau[i] += v[i] * x[i] / (p.tau[i] * p.tau[i]);
        df[i] = v[i];
      }
      break;
    case CellKind::Ltc:
      for (std::size_t i = 0; i < n; ++i) {
        const double f = activate(p.activation, u[i]);
        df[i] = v[i] * (p.a_vec[i] - x[i]);
        dx[i] += -v[i] * (1.0 / p.tau[i] + f);
        g.tau[i] += v[i] * x[i] / (p.tau[i] * p.tau[i]);
        g.a[i] += v[i] * f;
      }
      break;
  }

  Vec du(n);
  for (std::size_t i = 0; i < n; ++i) du[i] = df[i] * activate_grad(p.activation, u[i]);
  for (std::size_t i = 0; i < n; ++i) g.mu[i] += du[i];
  accumulate_outer(g.gamma, input, du);
  accumulate_outer(g.gamma_r, x, du);
  accumulate_rows(p.gamma_r, du, dx);
}

inline Vec euler_step_vjp(CellKind kind, const CellParams& p, const Vec& x, const Vec& input,
                          double dt, const Vec& v, ParamGrads& g) {
  Vec dx = v;
  Vec vd(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) vd[i] = dt * v[i];
  cell_derivative_vjp(kind, p, x, input, vd, dx, g);
  return dx;
}

inline Vec rk4_step_vjp(CellKind kind, const CellParams& p, const Vec& x, const Vec& input,
                        double dt, const Vec& v, ParamGrads& g) {
  const std::size_t n = x.size();
  // Rebuild the stage points from the cached sub-step start.
  auto deriv = [&](const Vec& xs) { return cell_derivative(kind, xs, input, p); };
  Vec k1 = deriv(x);
  Vec x2(n), x3(n), x4(n);
  for (std::size_t i = 0; i < n; ++i) x2[i] = x[i] + 0.5 * dt * k1[i];
  Vec k2 = deriv(x2);
  for (std::size_t i = 0; i < n; ++i) x3[i] = x[i] + 0.5 * dt * k2[i];
  Vec k3 = deriv(x3);
  for (std::size_t i = 0; i < n; ++i) x4[i] = x[i] + dt * k3[i];

  Vec dx = v;
  Vec dk1(n), dk2(n), dk3(n), dk4(n);
  for (std::size_t i = 0; i < n; ++i) {
    dk1[i] = dt / 6.0 * v[i];
    dk2[i] = dt / 3.0 * v[i];
    dk3[i] = dt / 3.0 * v[i];
    dk4[i] = dt / 6.0 * v[i];
  }

  Vec dx4(n, 0.0);
  cell_derivative_vjp(kind, p, x4, input, dk4, dx4, g);
  for (std::size_t i = 0; i < n; ++i) {
    dx[i] += dx4[i];
    dk3[i] += dt * dx4[i];
  }
  Vec dx3(n, 0.0);
  cell_derivative_vjp(kind, p, x3, input, dk3, dx3, g);
  for (std::size_t i = 0; i < n; ++i) {
    dx[i] += dx3[i];
    dk2[i] += 0.5 * dt * dx3[i];
  }
  Vec dx2(n, 0.0);
  cell_derivative_vjp(kind, p, x2, input, dk2, dx2, g);
  for (std::size_t i = 0; i < n; ++i) {
    dx[i] += dx2[i];
    dk1[i] += 0.5 * dt * dx2[i];
  }
  cell_derivative_vjp(kind, p, x, input, dk1, dx, g);
  return dx;
}

// Reverse of the semi-implicit update: the quotient is differentiated
// through both the numerator and the denominator.
inline Vec fused_step_vjp(const CellParams& p, const Vec& x, const Vec& input, double dt,
                          const Vec& v, ParamGrads& g) {
  const std::size_t n = p.n;
  Vec u;
  preactivation(p, x, input, u);

  Vec dx(n, 0.0), df(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double f = activate(p.activation, u[i]);
    const double den = 1.0 + dt * (1.0 / p.tau[i] + f);
    const double num = x[i] + dt * f * p.a_vec[i];
    const double dnum = v[i] / den;
    const double dden = -v[i] * num / (den * den);
    dx[i] += dnum;
    df[i] = dt * p.a_vec[i] * dnum + dt * dden;
    g.a[i] += dt * f * dnum;
    g.tau[i] += dden * (-dt / (p.tau[i] * p.tau[i]));
  }

  Vec du(n);
  for (std::size_t i = 0; i < n; ++i) du[i] = df[i] * activate_grad(p.activation, u[i]);
  for (std::size_t i = 0; i < n; ++i) g.mu[i] += du[i];
  accumulate_outer(g.gamma, input, du);
  accumulate_outer(g.gamma_r, x, du);
  accumulate_rows(p.gamma_r, du, dx);
  return dx;
}

inline Vec step_vjp(SolverKind::Method method, CellKind kind, const CellParams& p, const Vec& x,
                    const Vec& input, double dt, const Vec& v, ParamGrads& g) {
  switch (method) {
    case SolverKind::Method::Euler: return euler_step_vjp(kind, p, x, input, dt, v, g);
    case SolverKind::Method::Rk4: return rk4_step_vjp(kind, p, x, input, dt, v, g);
    case SolverKind::Method::Fused: return fused_step_vjp(p, x, input, dt, v, g);
    default: throw ParameterError("step_vjp: unsupported solver");
  }
}

}  // namespace detail

// Exact reverse-mode gradients of the total loss through every solver
// sub-step. Returns the loss (summed over time, averaged over the batch).
inline double bptt_gradients(const ForwardCache& cache, const CellParams& p,
                             const OutputHead& head, std::span<const Window> batch,
                             const LossSpec& loss, ParamGrads& grads) {
  if (cache.n != p.n || cache.m != p.m || cache.outputs != head.b_out.size() ||
      cache.states.size() != batch.size())
    throw ParameterError("bptt_gradients: cache does not match this configuration");

  grads = ParamGrads::zeros_like(p, head);
  double total = 0.0;
  Vec input(p.m);

  for (std::size_t w = 0; w < batch.size(); ++w) {
    const Window& win = batch[w];
    const std::size_t T = win.inputs.rows;
    const auto& states = cache.states[w];
    if (states.size() != T * cache.L + 1)
      throw ParameterError("bptt_gradients: cached state count does not match the window");

    Matrix dpred;
    total += loss_eval_grad(loss, cache.predictions[w], win.targets, &dpred);

    Vec dx(p.n, 0.0);
    for (std::size_t t = T; t-- > 0;) {
      const Vec& x_end = states[t * cache.L + cache.L];
      for (std::size_t c = 0; c < cache.outputs; ++c) {
        const double gpc = dpred(t, c);
        if (gpc == 0.0) continue;
        grads.b_out[c] += gpc;
        for (std::size_t i = 0; i < p.n; ++i) {
          grads.w_out(i, c) += x_end[i] * gpc;
          dx[i] += head.w_out(i, c) * gpc;
        }
      }
      auto row = win.inputs.row(t);
      input.assign(row.begin(), row.end());
      for (std::size_t l = cache.L; l-- > 0;) {
        const Vec& x_sub = states[t * cache.L + l];
        dx = detail::step_vjp(cache.solver, cache.kind, p, x_sub, input, cache.dt, dx, grads);
      }
    }
  }

  const double inv_b = 1.0 / static_cast<double>(batch.size());
  grads.scale(inv_b);
  return total * inv_b;
}

struct AdamState {
  ParamGrads m, v;

  static AdamState zeros_like(const CellParams& p, const OutputHead& h) {
    return {ParamGrads::zeros_like(p, h), ParamGrads::zeros_like(p, h)};
  }
};

namespace detail {

template <class F>
void zip_params(CellParams& p, OutputHead& h, F&& f) {
  f(p.tau);
  f(p.mu);
  f(p.a_vec);
  f(p.gamma.data);
  f(p.gamma_r.data);
  f(h.w_out.data);
  f(h.b_out);
}

}  // namespace detail

// Bias-corrected Adam step. Non-finite gradients skip the update and report
// false; tau entries are clamped to stay positive afterwards.
inline bool adam_update(CellParams& p, OutputHead& head, const ParamGrads& grads, AdamState& state,
                        std::size_t step_index, const AdamConfig& cfg, double lr) {
  if (step_index < 1) throw ParameterError("adam_update: step_index starts at 1");
  if (!grads.finite()) return false;

  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step_index));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step_index));

  const Vec* gs[7] = {&grads.tau,         &grads.mu,         &grads.a,    &grads.gamma.data,
                      &grads.gamma_r.data, &grads.w_out.data, &grads.b_out};
  Vec* ms[7] = {&state.m.tau,          &state.m.mu,          &state.m.a,    &state.m.gamma.data,
                &state.m.gamma_r.data, &state.m.w_out.data, &state.m.b_out};
  Vec* vs[7] = {&state.v.tau,          &state.v.mu,          &state.v.a,    &state.v.gamma.data,
                &state.v.gamma_r.data, &state.v.w_out.data, &state.v.b_out};
  Vec* xs[7] = {&p.tau, &p.mu, &p.a_vec, &p.gamma.data, &p.gamma_r.data, &head.w_out.data,
                &head.b_out};

  for (int k = 0; k < 7; ++k) {
    const Vec& g = *gs[k];
    Vec &m = *ms[k], &v = *vs[k], &x = *xs[k];
    for (std::size_t i = 0; i < g.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double mh = m[i] / bc1;
      const double vh = v[i] / bc2;
      x[i] -= lr * mh / (std::sqrt(vh) + cfg.epsilon);
    }
  }
  for (auto& t : p.tau) t = std::max(t, 1e-6);
  return true;
}

inline bool sgd_update(CellParams& p, OutputHead& head, const ParamGrads& grads, double lr) {
  if (!grads.finite()) return false;
  const Vec* gs[7] = {&grads.tau,         &grads.mu,         &grads.a,    &grads.gamma.data,
                      &grads.gamma_r.data, &grads.w_out.data, &grads.b_out};
  Vec* xs[7] = {&p.tau, &p.mu, &p.a_vec, &p.gamma.data, &p.gamma_r.data, &head.w_out.data,
                &head.b_out};
  for (int k = 0; k < 7; ++k)
    for (std::size_t i = 0; i < gs[k]->size(); ++i) (*xs[k])[i] -= lr * (*gs[k])[i];
  for (auto& t : p.tau) t = std::max(t, 1e-6);
  return true;
}

// Lean forward pass (no cache) for evaluation.
inline Matrix predict_window(CellKind kind, const CellParams& p, const OutputHead& head,
                             SolverKind::Method solver, const Window& w, std::size_t L,
                             double dt) {
  const std::size_t T = w.inputs.rows;
  Matrix preds(T, head.b_out.size());
  Vec x(p.n, 0.0), input(p.m);
  for (std::size_t t = 0; t < T; ++t) {
    auto row = w.inputs.row(t);
    input.assign(row.begin(), row.end());
    for (std::size_t l = 0; l < L; ++l) x = detail::fixed_step(solver, kind, p, x, input, dt);
    detail::readout(head, x, preds.row(t));
  }
  return preds;
}

inline double evaluate_loss(CellKind kind, const CellParams& p, const OutputHead& head,
                            SolverKind::Method solver, std::span<const Window> windows,
                            std::size_t L, double dt, const LossSpec& spec) {
  if (windows.empty()) throw ParameterError("evaluate_loss: empty window set");
  double total = 0.0;
  for (const Window& w : windows)
    total += loss_eval(spec, predict_window(kind, p, head, solver, w, L, dt), w.targets);
  return total / static_cast<double>(windows.size());
}

enum class EvalMetric { Mse, Accuracy, F1 };

inline EvalMetric eval_metric_from_string(const std::string& name) {
  if (name == "mse") return EvalMetric::Mse;
  if (name == "accuracy") return EvalMetric::Accuracy;
  if (name == "f1") return EvalMetric::F1;
  throw ParameterError("unknown metric: " + name);
}

// Test-set metric. Accuracy takes the argmax over logits per step; f1 is
// the binary F1 of class 1.
inline double evaluate_metric(CellKind kind, const CellParams& p, const OutputHead& head,
                              SolverKind::Method solver, std::span<const Window> windows,
                              std::size_t L, double dt, EvalMetric metric) {
  if (windows.empty()) throw ParameterError("evaluate_metric: empty window set");
  if (metric == EvalMetric::Mse)
    return evaluate_loss(kind, p, head, solver, windows, L, dt, {LossKind::Mse, {}});

  std::size_t correct = 0, steps = 0, tp = 0, fp = 0, fn = 0;
  for (const Window& w : windows) {
    Matrix preds = predict_window(kind, p, head, solver, w, L, dt);
    if (w.targets.cols != 1)
      throw ParameterError("evaluate_metric: classification needs one label column");
    for (std::size_t t = 0; t < preds.rows; ++t) {
      std::size_t arg = 0;
      for (std::size_t c = 1; c < preds.cols; ++c)
        if (preds(t, c) > preds(t, arg)) arg = c;
      const auto label = static_cast<std::size_t>(std::llround(w.targets(t, 0)));
      ++steps;
      if (arg == label) ++correct;
      if (arg == 1 && label == 1) ++tp;
      if (arg == 1 && label != 1) ++fp;
      if (arg != 1 && label == 1) ++fn;
    }
  }
  if (metric == EvalMetric::Accuracy)
    return static_cast<double>(correct) / static_cast<double>(steps);
  const double denom = static_cast<double>(2 * tp + fp + fn);
  return denom > 0.0 ? 2.0 * static_cast<double>(tp) / denom : 0.0;
}

// Everything needed to restore and rerun a trained model.
struct Checkpoint {
  int format_version = 1;
  CellKind kind = CellKind::Ltc;
  CellParams params;
  OutputHead head;
  TrainingConfig config;
  double best_validation_metric = 0.0;
  std::string rng_algorithm = kRngAlgorithm;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_metric = 0.0;
};

struct TrainResult {
  Checkpoint best;
  std::vector<EpochRecord> log;
  bool diverged = false;
};

// Minibatch training with per-epoch validation; the returned checkpoint
// holds the parameters that achieved the best validation metric.
inline TrainResult train_loop(const std::vector<Window>& train, const std::vector<Window>& val,
                              CellKind kind, const TrainingConfig& cfg) {
  if (train.empty() || val.empty())
    throw ParameterError("train_loop: train and validation splits must be non-empty");
  if (cfg.minibatch < 1 || cfg.hidden_units < 1 || cfg.solver_substeps < 1)
    throw ParameterError("train_loop: counts must be >= 1");
  if (!(cfg.learning_rate > 0.0)) throw ParameterError("train_loop: learning rate must be > 0");

  const std::size_t m = train.front().inputs.cols;
  for (const auto& w : train)
    if (w.inputs.rows > cfg.bptt_length)
      throw ParameterError("train_loop: window longer than bptt_length");

  std::size_t outputs = cfg.outputs;
  if (outputs == 0) {
    if (cfg.loss == LossKind::Mse) {
      outputs = train.front().targets.cols;
    } else {
      double max_label = 0.0;
      for (const auto* split : {&train, &val})
        for (const auto& w : *split)
          for (std::size_t t = 0; t < w.targets.rows; ++t)
            max_label = std::max(max_label, w.targets(t, 0));
      outputs = static_cast<std::size_t>(std::llround(max_label)) + 1;
    }
  }

  Rng rng(cfg.seed);
  CellParams params = init_training_cell(kind, cfg.hidden_units, m, cfg.activation, rng);
  OutputHead head{Matrix(params.n, outputs), Vec(outputs, 0.0)};
  LossSpec loss{cfg.loss, cfg.class_weights};
  const double dt = cfg.dt();

  TrainResult result;
  auto evaluate = [&](const std::vector<Window>& ws) {
    return evaluate_loss(kind, params, head, cfg.solver, ws, cfg.solver_substeps, dt, loss);
  };

  double best_metric = evaluate(val);
  CellParams best_params = params;
  OutputHead best_head = head;
  result.log.push_back({0, evaluate(train), best_metric});

  AdamState adam = AdamState::zeros_like(params, head);
  std::size_t adam_step = 0;
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng shuffle_rng(Rng::derive(Rng::derive(cfg.seed, 0x73687566u), epoch));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.next_below(i)]);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.minibatch) {
      const std::size_t stop = std::min(order.size(), start + cfg.minibatch);
      std::vector<Window> batch;
      batch.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) batch.push_back(train[order[i]]);

      ForwardCache cache =
          forward_unroll(kind, params, head, cfg.solver, batch, cfg.solver_substeps, dt);
      ParamGrads grads;
      const double batch_loss = bptt_gradients(cache, params, head, batch, loss, grads);
      epoch_loss += batch_loss * static_cast<double>(batch.size());

      const double gnorm = grads.global_norm();
      if (cfg.grad_clip > 0.0 && gnorm > cfg.grad_clip) grads.scale(cfg.grad_clip / gnorm);

      if (cfg.optimizer == OptimizerKind::Adam)
        adam_update(params, head, grads, adam, ++adam_step, cfg.adam, cfg.learning_rate);
      else
        sgd_update(params, head, grads, cfg.learning_rate);
    }
    epoch_loss /= static_cast<double>(train.size());

    const double val_metric = evaluate(val);
    result.log.push_back({epoch, epoch_loss, val_metric});
    if (!std::isfinite(epoch_loss) || !std::isfinite(val_metric)) {
      result.diverged = true;
      break;
    }
    if (val_metric < best_metric) {
      best_metric = val_metric;
      best_params = params;
      best_head = head;
    }
  }

  result.best.kind = kind;
  result.best.params = std::move(best_params);
  result.best.head = std::move(best_head);
  result.best.config = cfg;
  result.best.config.outputs = outputs;
  result.best.best_validation_metric = best_metric;
  return result;
}

}  // namespace ltc
