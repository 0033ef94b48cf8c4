#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "ltc/cell.hpp"
#include "ltc/errors.hpp"
#include "ltc/pca.hpp"
#include "ltc/polyline.hpp"
#include "ltc/rng.hpp"
#include "ltc/solver.hpp"

namespace ltc {

// Closed circular probe (sin t, cos t) on num_points uniformly spaced
// t in [0, 2*pi]; first and last points coincide.
inline std::vector<Vec> circular_input(std::size_t num_points) {
  if (num_points < 2) throw ParameterError("circular_input: need at least 2 points");
  std::vector<Vec> pts(num_points);
  const double two_pi = 2.0 * 3.14159265358979323846;
  for (std::size_t i = 0; i < num_points; ++i) {
    const double t = two_pi * static_cast<double>(i) / static_cast<double>(num_points - 1);
    pts[i] = {std::sin(t), std::cos(t)};
  }
  return pts;
}

// Same probe on the grid t = i * dt, i = 0..samples-1. With dt = 0.01 and
// samples = 629 the grid covers one full turn.
inline std::vector<Vec> circular_input_steps(std::size_t samples, double dt) {
  if (samples < 2) throw ParameterError("circular_input_steps: need at least 2 samples");
  if (!(dt > 0.0)) throw ParameterError("circular_input_steps: dt must be > 0");
  std::vector<Vec> pts(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    const double t = dt * static_cast<double>(i);
    pts[i] = {std::sin(t), std::cos(t)};
  }
  return pts;
}

inline Polyline2D to_polyline(const std::vector<Vec>& pts) {
  Polyline2D p;
  p.points.reserve(pts.size());
  for (const auto& v : pts) p.points.push_back({v[0], v[1]});
  return p;
}

struct LatentResult {
  Polyline2D path;
  std::array<double, 2> variance_explained{0.0, 0.0};
  bool degenerate = false;    // activations constant in time
  double mean_norm = 0.0;     // mean 2-norm of the latent points
};

// Simulate the stack over the inputs and project the last layer's
// per-sample states onto their top two principal axes.
inline LatentResult latent_trajectory(const StackedCell& stack, const std::vector<Vec>& inputs,
                                      const SolverKind& solver, double sample_period,
                                      std::size_t substeps) {
  if (inputs.size() < 2) throw ParameterError("latent_trajectory: need at least 2 samples");
  const double dt = sample_period / static_cast<double>(substeps);
  Vec x0(stack.state_size(), 0.0);
  Trajectory traj = simulate_stack(stack, solver, x0, inputs, dt, substeps);

  const std::size_t last_n = stack.layers.back().n;
  const std::size_t off = stack.state_size() - last_n;
  Matrix obs(inputs.size(), last_n);
  for (std::size_t s = 0; s < inputs.size(); ++s) {
    const Vec& full = traj.states[traj.sample_offsets[s + 1]];
    std::copy(full.begin() + off, full.end(), obs.row(s).begin());
  }

  LatentResult result;
  if (last_n >= 2) {
    PcaResult pca = pca_top2(obs);
    result.path = std::move(pca.projection);
    result.variance_explained = pca.variance_explained;
  } else {
    // width-1 layer: center the single coordinate, second axis is zero
    double mean = 0.0;
    for (std::size_t s = 0; s < obs.rows; ++s) mean += obs(s, 0);
    mean /= static_cast<double>(obs.rows);
    result.path.points.resize(obs.rows);
    double var = 0.0;
    for (std::size_t s = 0; s < obs.rows; ++s) {
      result.path.points[s] = {obs(s, 0) - mean, 0.0};
      var += result.path.points[s].x * result.path.points[s].x;
    }
    result.variance_explained = {var > 0.0 ? 1.0 : 0.0, 0.0};
  }
  result.degenerate =
      result.variance_explained[0] == 0.0 && result.variance_explained[1] == 0.0;
  for (const auto& p : result.path.points) result.mean_norm += std::hypot(p.x, p.y);
  result.mean_norm /= static_cast<double>(result.path.points.size());
  return result;
}

struct ExpressivityConfig {
  std::vector<CellKind> models{CellKind::NeuralOde, CellKind::CtRnn, CellKind::Ltc};
  Activation activation = Activation::HardTanh;
  std::size_t width = 100;
  std::size_t layers = 1;
  double sw2 = 2.0;  // weight variance; weights ~ N(0, sw2 / width)
  double sb2 = 1.0;  // bias variance
  std::size_t trials = 100;
  double input_dt = 0.01;
  std::size_t samples = 629;  // covers t in [0, 2*pi] at the default dt
  SolverKind solver{SolverKind::Method::Dopri45, 1e-3, 1e-6};
  std::size_t substeps = 6;  // fixed-step solvers only
  RngSeed seed = 0;
  bool keep_paths = false;  // retain the latent polylines in the records
};

struct TrialRecord {
  std::size_t trial = 0;
  CellKind model = CellKind::Ltc;
  double length = 0.0;
  double ve1 = 0.0, ve2 = 0.0;
  double mean_latent_norm = 0.0;
  bool failed = false;
  bool low_variance_explained = false;  // top-2 sum < 0.5, kept in the stats
  std::string error;
  Polyline2D path;  // filled only when the config keeps paths
};

struct ModelSummary {
  CellKind model = CellKind::Ltc;
  std::size_t valid_trials = 0, failed_trials = 0;
  double mean_length = 0.0, std_length = 0.0;
  double ve_sum_mean = 0.0;
  double mean_latent_norm = 0.0;
};

struct ExpressivityReport {
  ExpressivityConfig config;
  std::string input_preset;
  double input_length = 0.0;
  std::vector<TrialRecord> trials;
  std::vector<ModelSummary> summary;
  std::string rng_algorithm = kRngAlgorithm;
};

// Fresh weights per trial, all requested models simulated on the shared
// circular probe. Trials aborted by the solver are excluded from the
// statistics and counted.
inline ExpressivityReport trajectory_sweep(const ExpressivityConfig& cfg) {
  if (cfg.width < 1 || cfg.layers < 1 || cfg.trials < 1)
    throw ParameterError("trajectory_sweep: width, layers and trials must be >= 1");
  if (cfg.sw2 < 0.0 || cfg.sb2 < 0.0)
    throw ParameterError("trajectory_sweep: variances must be >= 0");

  ExpressivityReport report;
  report.config = cfg;
  char preset[96];
  std::snprintf(preset, sizeof preset, "circle dt=%g T=%zu", cfg.input_dt, cfg.samples);
  report.input_preset = preset;

  const std::vector<Vec> inputs = circular_input_steps(cfg.samples, cfg.input_dt);
  report.input_length = arc_length(to_polyline(inputs));

  for (CellKind model : cfg.models) {
    ModelSummary sum;
    sum.model = model;
    std::vector<double> lengths;
    double ve_sum = 0.0, norm_sum = 0.0;

    for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
      // One stream per trial index: every model sees the same draws, so the
      // three families share f within a trial.
      Rng rng(Rng::derive(cfg.seed, trial));
      StackedCell stack{model, {}};
      for (std::size_t l = 0; l < cfg.layers; ++l)
        stack.layers.push_back(sample_measurement_cell(model, cfg.width,
                                                       l == 0 ? 2 : cfg.width, cfg.activation,
                                                       cfg.sw2, cfg.sb2, rng));
      TrialRecord rec;
      rec.trial = trial;
      rec.model = model;
      try {
        LatentResult lat =
            latent_trajectory(stack, inputs, cfg.solver, cfg.input_dt, cfg.substeps);
        rec.length = arc_length(lat.path);
        rec.ve1 = lat.variance_explained[0];
        rec.ve2 = lat.variance_explained[1];
        rec.mean_latent_norm = lat.mean_norm;
        rec.low_variance_explained = rec.ve1 + rec.ve2 < 0.5;
        if (cfg.keep_paths) rec.path = lat.path;
        lengths.push_back(rec.length);
        ve_sum += rec.ve1 + rec.ve2;
        norm_sum += rec.mean_latent_norm;
      } catch (const Error& e) {
        rec.failed = true;
        rec.error = e.what();
        ++sum.failed_trials;
      }
      report.trials.push_back(std::move(rec));
    }

    sum.valid_trials = lengths.size();
    if (!lengths.empty()) {
      double s = 0.0;
      for (double v : lengths) s += v;
      sum.mean_length = s / static_cast<double>(lengths.size());
      if (lengths.size() > 1) {
        double ss = 0.0;
        for (double v : lengths) ss += (v - sum.mean_length) * (v - sum.mean_length);
        sum.std_length = std::sqrt(ss / static_cast<double>(lengths.size() - 1));
      }
      sum.ve_sum_mean = ve_sum / static_cast<double>(lengths.size());
      sum.mean_latent_norm = norm_sum / static_cast<double>(lengths.size());
    }
    report.summary.push_back(sum);
  }
  return report;
}

// Lower-bound expressions for the latent trajectory length growth. The
// unknown big-O constants are taken as 1, so the values are only meaningful
// relative to each other ("relative bound").
inline double traj_bound_base(double sigma_w, double sigma_b, std::size_t k) {
  if (sigma_w < 0.0 || sigma_b < 0.0) throw ParameterError("bound: sigmas must be >= 0");
  if (k < 1) throw ParameterError("bound: k must be >= 1");
  if (sigma_w == 0.0) return 0.0;
  const double v = sigma_w * sigma_w + sigma_b * sigma_b;
  return sigma_w * std::sqrt(static_cast<double>(k)) /
         std::sqrt(v + static_cast<double>(k) * std::sqrt(v));
}

inline double bound_node(double sigma_w, double sigma_b, std::size_t k, std::size_t d, double L,
                         double input_length) {
  if (d < 1 || L <= 0.0) throw ParameterError("bound: d and L must be >= 1");
  return std::pow(traj_bound_base(sigma_w, sigma_b, k), static_cast<double>(d) * L) *
         input_length;
}

struct CtrnnBound {
  double value = 0.0;
  bool clamped = false;  // negative numerator reported as zero
};

inline CtrnnBound bound_ctrnn(double sigma_w, double sigma_b, std::size_t k, std::size_t d,
                              double L, double input_length) {
  if (d < 1 || L <= 0.0) throw ParameterError("bound: d and L must be >= 1");
  const double num = (sigma_w - sigma_b) * std::sqrt(static_cast<double>(k));
  if (num <= 0.0) return {0.0, true};
  const double v = sigma_w * sigma_w + sigma_b * sigma_b;
  const double base = num / std::sqrt(v + static_cast<double>(k) * std::sqrt(v));
  return {std::pow(base, static_cast<double>(d) * L) * input_length, false};
}

inline double bound_ltc(double sigma_w, double sigma_b, std::size_t k, std::size_t d, double L,
                        double z_norm, double delta_t, double input_length) {
  if (z_norm < 0.0) throw ParameterError("bound_ltc: z_norm must be >= 0");
  if (!(delta_t > 0.0)) throw ParameterError("bound_ltc: delta_t must be > 0");
  const double base = traj_bound_base(sigma_w, sigma_b, k);
  const double extra = sigma_w + z_norm / std::min(delta_t, L);
  return std::pow(base, static_cast<double>(d) * L) * extra * input_length;
}

}  // namespace ltc
