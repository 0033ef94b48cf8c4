// Command-line front end: training, evaluation, expressivity sweeps, depth
// measurement, solver comparison and bounds fuzzing. Every run writes a
// manifest sufficient to replay it exactly.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ltc/ltc.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "ltckit 0.1.0";

// exit codes: 0 ok, 1 runtime/numeric, 2 usage/config, 3 bounds violations
constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitViolations = 3;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

ltc::SplitRatios parse_ratios(const std::string& s) {
  // "75:10:15" or "0.75:0.1:0.15"
  std::vector<double> parts;
  std::string cur;
  for (char c : s + ":") {
    if (c == ':') {
      parts.push_back(std::strtod(cur.c_str(), nullptr));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (parts.size() != 3) throw ltc::ParameterError("ratios must look like 75:10:15");
  double total = parts[0] + parts[1] + parts[2];
  if (total <= 0.0) throw ltc::ParameterError("ratios must be positive");
  return {parts[0] / total, parts[1] / total, parts[2] / total};
}

fs::path default_out_dir(const std::string& command) {
  if (const char* env = std::getenv("LTC_OUT_DIR")) return fs::path(env) / command;
  return fs::path("runs") / command;
}

struct RunContext {
  std::string command;
  std::vector<std::string> argv;  // args after the program name
  fs::path out_dir;
  json config;
  std::vector<std::string> outputs;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  fs::path file(const std::string& name) {
    outputs.push_back((out_dir / name).string());
    return out_dir / name;
  }

  void write_manifest(ltc::RngSeed seed) {
    json m;
    m["command"] = command;
    m["argv"] = argv;
    m["config"] = config;
    m["seed"] = std::to_string(seed);
    m["code_version"] = kVersion;
    m["rng_algorithm"] = ltc::kRngAlgorithm;
    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start);
    m["wall_clock_seconds"] = elapsed.count();
    m["outputs"] = outputs;
    std::ofstream(out_dir / "manifest.json") << m.dump(2) << '\n';
  }
};

struct CsvWriter {
  std::ofstream out;
  explicit CsvWriter(const fs::path& p) : out(p, std::ios::binary) {
    if (!out) throw ltc::ParameterError("cannot open " + p.string() + " for writing");
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      out << cells[i];
    }
    out << '\n';
  }
};

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string model = "ltc";
  std::string data;
  std::string features;
  std::string targets;
  std::string solver;  // empty: per-model default
  std::string loss = "mse";
  std::string class_weights;
  std::string activation = "sigmoid";
  std::string missing = "zero";
  std::string ratios = "75:10:15";
  std::size_t units = 32;
  std::size_t batch = 16;
  double lr = 0.01;
  std::size_t substeps = 6;
  std::size_t bptt = 32;
  std::size_t epochs = 200;
  std::size_t window = 32;
  std::size_t stride = 1;
  double sample_period = 1.0;
  bool no_normalize = false;
  ltc::RngSeed seed = 0;
  std::string out;
};

ltc::SolverKind::Method default_solver(ltc::CellKind kind) {
  switch (kind) {
    case ltc::CellKind::NeuralOde: return ltc::SolverKind::Method::Rk4;
    case ltc::CellKind::CtRnn: return ltc::SolverKind::Method::Euler;
    case ltc::CellKind::Ltc: return ltc::SolverKind::Method::Fused;
  }
  return ltc::SolverKind::Method::Fused;
}

int run_train(const TrainArgs& a, RunContext& ctx) {
  const ltc::CellKind kind = ltc::cell_kind_from_string(a.model);
  ltc::TrainingConfig cfg;
  cfg.hidden_units = a.units;
  cfg.minibatch = a.batch;
  cfg.learning_rate = a.lr;
  cfg.solver_substeps = a.substeps;
  cfg.bptt_length = a.bptt;
  cfg.epochs = a.epochs;
  cfg.loss = ltc::loss_kind_from_string(a.loss);
  cfg.seed = a.seed;
  cfg.sample_period = a.sample_period;
  cfg.solver = a.solver.empty() ? default_solver(kind) : ltc::solver_method_from_string(a.solver);
  cfg.activation = ltc::activation_from_string(a.activation);
  for (const auto& w : split_list(a.class_weights))
    cfg.class_weights.push_back(std::strtod(w.c_str(), nullptr));

  const auto feature_cols = split_list(a.features);
  const auto target_cols = split_list(a.targets);
  if (feature_cols.empty()) throw ltc::ParameterError("--features must name at least one column");
  if (target_cols.empty()) throw ltc::ParameterError("--targets must name at least one column");

  ltc::Dataset ds = ltc::load_csv(a.data, feature_cols, target_cols,
                                  ltc::missing_policy_from_string(a.missing));
  const ltc::SplitRatios ratios = parse_ratios(a.ratios);

  ltc::NormStats fstats, tstats;
  const bool normalize_targets = !a.no_normalize && cfg.loss == ltc::LossKind::Mse;
  if (!a.no_normalize) {
    const auto rows = ltc::training_rows(ds, a.window, a.stride, ratios, a.seed);
    fstats = ltc::compute_norm_stats(ds.features, rows);
    ltc::apply_norm(ds.features, fstats);
    if (normalize_targets) {
      tstats = ltc::compute_norm_stats(ds.targets, rows);
      ltc::apply_norm(ds.targets, tstats);
    }
  }

  ltc::WindowedSplit split = ltc::window_and_split(ds, a.window, a.stride, ratios, a.seed);
  bool val_is_train = false;
  if (split.validation.empty()) {
    // tiny datasets: validate on the training windows rather than fail
    split.validation = split.train;
    val_is_train = true;
  }

  ltc::TrainResult res = ltc::train_loop(split.train, split.validation, kind, cfg);

  const fs::path ck_path = ctx.file("checkpoint.json");
  ltc::checkpoint_save(ck_path, res.best);

  if (!a.no_normalize) {
    json norm;
    norm["features"] = {{"mean", fstats.mean}, {"stddev", fstats.stddev}};
    norm["normalize_targets"] = normalize_targets;
    if (normalize_targets) norm["targets"] = {{"mean", tstats.mean}, {"stddev", tstats.stddev}};
    std::ofstream(ctx.file("norm.json")) << norm.dump(2) << '\n';
  }

  {
    CsvWriter csv(ctx.file("metrics.csv"));
    csv.row({"epoch", "train_loss", "val_metric"});
    for (const auto& rec : res.log)
      csv.row({std::to_string(rec.epoch), fmt(rec.train_loss), fmt(rec.val_metric)});
  }

  ctx.config["windows"] = {{"train", split.train.size()},
                           {"validation", split.validation.size()},
                           {"test", split.test.size()},
                           {"validation_is_train", val_is_train}};
  ctx.write_manifest(a.seed);

  std::cout << "trained " << a.model << " for " << res.log.size() - 1 << " epochs; best val "
            << fmt(res.best.best_validation_metric) << (res.diverged ? " (diverged early)" : "")
            << "\n";
  return res.diverged ? kExitRuntime : kExitOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string features;
  std::string targets;
  std::string metric = "mse";
  std::string missing = "zero";
  std::string norm;  // defaults to norm.json next to the checkpoint
  std::size_t stride = 1;
  std::string out;
};

int run_eval(const EvalArgs& a, RunContext& ctx) {
  ltc::Checkpoint ck = ltc::checkpoint_load(a.checkpoint);

  const auto feature_cols = split_list(a.features);
  const auto target_cols = split_list(a.targets);
  ltc::Dataset ds = ltc::load_csv(a.data, feature_cols, target_cols,
                                  ltc::missing_policy_from_string(a.missing));
  if (ds.features.cols != ck.params.m)
    throw ltc::SchemaError("eval: checkpoint expects " + std::to_string(ck.params.m) +
                           " features, file has " + std::to_string(ds.features.cols));

  fs::path norm_path = a.norm.empty() ? fs::path(a.checkpoint).parent_path() / "norm.json"
                                      : fs::path(a.norm);
  if (fs::exists(norm_path)) {
    json norm;
    std::ifstream(norm_path) >> norm;
    ltc::NormStats fstats;
    fstats.mean = norm.at("features").at("mean").get<ltc::Vec>();
    fstats.stddev = norm.at("features").at("stddev").get<ltc::Vec>();
    fstats.constant.assign(fstats.mean.size(), false);
    ltc::apply_norm(ds.features, fstats);
    if (norm.value("normalize_targets", false)) {
      ltc::NormStats tstats;
      tstats.mean = norm.at("targets").at("mean").get<ltc::Vec>();
      tstats.stddev = norm.at("targets").at("stddev").get<ltc::Vec>();
      tstats.constant.assign(tstats.mean.size(), false);
      ltc::apply_norm(ds.targets, tstats);
    }
  }

  // every window of the file, in order
  ltc::WindowedSplit split =
      ltc::window_and_split(ds, ck.config.bptt_length, a.stride, {1.0, 0.0, 0.0}, 0);

  const double value = ltc::evaluate_metric(
      ck.kind, ck.params, ck.head, ck.config.solver, split.train, ck.config.solver_substeps,
      ck.config.dt(), ltc::eval_metric_from_string(a.metric));

  json summary;
  summary["metric"] = a.metric;
  summary["value"] = value;
  summary["windows"] = split.train.size();
  summary["checkpoint"] = a.checkpoint;
  std::ofstream(ctx.file("eval.json")) << summary.dump(2) << '\n';
  ctx.write_manifest(ck.config.seed);

  std::cout << a.metric << " " << fmt(value) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- sweeps

struct SweepArgs {
  std::string models = "node,ctrnn,ltc";
  std::string activation = "hard-tanh";
  std::size_t width = 100;
  std::size_t layers = 1;
  double sw2 = 2.0;
  double sb2 = 1.0;
  std::size_t trials = 100;
  double dt = 0.01;
  std::size_t samples = 629;
  std::string solver = "dopri45";
  double rtol = 1e-3;
  double atol = 1e-6;
  std::size_t substeps = 6;
  bool measure_depth = false;
  bool dump_latent = false;
  ltc::RngSeed seed = 0;
  std::string out;
};

ltc::ExpressivityConfig sweep_config(const SweepArgs& a) {
  ltc::ExpressivityConfig cfg;
  cfg.models.clear();
  for (const auto& m : split_list(a.models)) cfg.models.push_back(ltc::cell_kind_from_string(m));
  cfg.activation = ltc::activation_from_string(a.activation);
  cfg.width = a.width;
  cfg.layers = a.layers;
  cfg.sw2 = a.sw2;
  cfg.sb2 = a.sb2;
  cfg.trials = a.trials;
  cfg.input_dt = a.dt;
  cfg.samples = a.samples;
  cfg.solver = {ltc::solver_method_from_string(a.solver), a.rtol, a.atol};
  cfg.substeps = a.substeps;
  cfg.seed = a.seed;
  return cfg;
}

void write_trials_csv(CsvWriter& csv, const ltc::ExpressivityReport& rep) {
  csv.row({"trial", "model", "length", "ve1", "ve2", "mean_latent_norm", "low_ve", "failed",
           "error"});
  for (const auto& t : rep.trials)
    csv.row({std::to_string(t.trial), ltc::to_string(t.model), fmt(t.length), fmt(t.ve1),
             fmt(t.ve2), fmt(t.mean_latent_norm), t.low_variance_explained ? "1" : "0",
             t.failed ? "1" : "0", t.error});
}

json summary_json(const ltc::ExpressivityReport& rep) {
  json out;
  out["input_preset"] = rep.input_preset;
  out["input_length"] = rep.input_length;
  out["rng_algorithm"] = rep.rng_algorithm;
  json models = json::object();
  for (const auto& s : rep.summary) {
    json m;
    m["valid_trials"] = s.valid_trials;
    m["failed_trials"] = s.failed_trials;
    m["mean_length"] = s.mean_length;
    m["std_length"] = s.std_length;
    m["variance_explained_sum_mean"] = s.ve_sum_mean;
    m["mean_latent_norm"] = s.mean_latent_norm;
    models[ltc::to_string(s.model)] = m;
  }
  out["models"] = models;
  return out;
}

int run_expressivity(const SweepArgs& a, RunContext& ctx) {
  ltc::ExpressivityConfig cfg = sweep_config(a);
  cfg.keep_paths = a.dump_latent;
  ltc::ExpressivityReport rep = ltc::trajectory_sweep(cfg);

  CsvWriter csv(ctx.file("trials.csv"));
  write_trials_csv(csv, rep);

  if (a.dump_latent) {
    CsvWriter paths(ctx.file("latent.csv"));
    paths.row({"trial", "model", "step", "pc1", "pc2"});
    for (const auto& t : rep.trials)
      for (std::size_t i = 0; i < t.path.points.size(); ++i)
        paths.row({std::to_string(t.trial), ltc::to_string(t.model), std::to_string(i),
                   fmt(t.path.points[i].x), fmt(t.path.points[i].y)});
  }

  json summary = summary_json(rep);
  if (a.measure_depth) {
    const auto inputs = ltc::circular_input_steps(cfg.samples, cfg.input_dt);
    ltc::DepthConfig dc{cfg.width, cfg.layers, cfg.activation, cfg.sw2, cfg.sb2, cfg.trials,
                        cfg.seed};
    const double sw = std::sqrt(cfg.sw2), sb = std::sqrt(cfg.sb2);
    for (const auto& s : rep.summary) {
      auto depth = ltc::computational_depth(s.model, dc, inputs, cfg.input_dt,
                                            {ltc::SolverKind::Method::Dopri45, a.rtol, a.atol});
      auto& m = summary["models"][ltc::to_string(s.model)];
      m["depth_mean"] = depth.mean;
      m["depth_std"] = depth.stddev;
      m["depth_failures"] = depth.failures;
      const double L = std::max(depth.mean, 1e-9);
      if (s.model == ltc::CellKind::Ltc)
        m["relative_bound"] = ltc::bound_ltc(sw, sb, cfg.width, cfg.layers, L,
                                             s.mean_latent_norm, cfg.input_dt, rep.input_length);
      else if (s.model == ltc::CellKind::CtRnn)
        m["relative_bound"] =
            ltc::bound_ctrnn(sw, sb, cfg.width, cfg.layers, L, rep.input_length).value;
      else
        m["relative_bound"] = ltc::bound_node(sw, sb, cfg.width, cfg.layers, L, rep.input_length);
    }
  }
  std::ofstream(ctx.file("summary.json")) << summary.dump(2) << '\n';
  ctx.write_manifest(a.seed);

  for (const auto& s : rep.summary)
    std::cout << ltc::to_string(s.model) << " mean_length " << fmt(s.mean_length) << " ("
              << s.valid_trials << " trials, " << s.failed_trials << " failed)\n";
  return kExitOk;
}

int run_depth(const SweepArgs& a, RunContext& ctx) {
  ltc::ExpressivityConfig cfg = sweep_config(a);
  const auto inputs = ltc::circular_input_steps(cfg.samples, cfg.input_dt);
  ltc::DepthConfig dc{cfg.width, cfg.layers, cfg.activation, cfg.sw2, cfg.sb2, cfg.trials,
                      cfg.seed};
  const ltc::SolverKind solver{ltc::SolverKind::Method::Dopri45, a.rtol, a.atol};

  CsvWriter csv(ctx.file("depth.csv"));
  csv.row({"trial", "model", "steps_per_sample"});
  json models = json::object();
  std::vector<std::pair<ltc::CellKind, double>> means;
  for (ltc::CellKind kind : cfg.models) {
    auto res = ltc::computational_depth(kind, dc, inputs, cfg.input_dt, solver);
    for (std::size_t i = 0; i < res.per_trial.size(); ++i)
      csv.row({std::to_string(i), ltc::to_string(kind), fmt(res.per_trial[i])});
    json m;
    m["mean"] = res.mean;
    m["std"] = res.stddev;
    m["failures"] = res.failures;
    models[ltc::to_string(kind)] = m;
    means.emplace_back(kind, res.mean);
    std::cout << ltc::to_string(kind) << " depth " << fmt(res.mean) << " +- " << fmt(res.stddev)
              << " (" << res.failures << " failures)\n";
  }
  json summary;
  summary["models"] = models;
  std::ofstream(ctx.file("summary.json")) << summary.dump(2) << '\n';
  ctx.write_manifest(a.seed);
  return kExitOk;
}

int run_solver_compare(const SweepArgs& a, RunContext& ctx) {
  ltc::ExpressivityConfig cfg = sweep_config(a);
  cfg.models = {ltc::CellKind::Ltc};

  ltc::ExpressivityConfig adaptive = cfg;
  adaptive.solver = {ltc::SolverKind::Method::Dopri45, a.rtol, a.atol};
  ltc::ExpressivityConfig fused = cfg;
  fused.solver = {ltc::SolverKind::Method::Fused};

  ltc::ExpressivityReport ra = ltc::trajectory_sweep(adaptive);
  ltc::ExpressivityReport rf = ltc::trajectory_sweep(fused);

  CsvWriter csv(ctx.file("trials.csv"));
  csv.row({"trial", "solver", "length", "failed"});
  for (const auto& t : ra.trials)
    csv.row({std::to_string(t.trial), "dopri45", fmt(t.length), t.failed ? "1" : "0"});
  for (const auto& t : rf.trials)
    csv.row({std::to_string(t.trial), "fused", fmt(t.length), t.failed ? "1" : "0"});

  const double la = ra.summary[0].mean_length, lf = rf.summary[0].mean_length;
  const double rel = std::abs(la - lf) / std::max({la, lf, 1e-12});
  json summary;
  summary["dopri45_mean_length"] = la;
  summary["fused_mean_length"] = lf;
  summary["relative_difference"] = rel;
  summary["dopri45_failed_trials"] = ra.summary[0].failed_trials;
  summary["fused_failed_trials"] = rf.summary[0].failed_trials;
  std::ofstream(ctx.file("summary.json")) << summary.dump(2) << '\n';
  ctx.write_manifest(a.seed);

  std::cout << "dopri45 " << fmt(la) << " vs fused " << fmt(lf) << " (relative difference "
            << fmt(rel) << ")\n";
  return kExitOk;
}

// ---------------------------------------------------------------- bounds

struct BoundsArgs {
  std::size_t trials = 1000;
  std::size_t steps = 200;
  std::size_t max_neurons = 16;
  double input_amp = 1e6;
  double slack = 1e-9;
  std::string solver = "fused";
  double rtol = 1e-6;
  double atol = 1e-9;
  ltc::RngSeed seed = 0;
  std::string out;
};

int run_bounds(const BoundsArgs& a, RunContext& ctx) {
  ltc::FuzzConfig cfg;
  cfg.trials = a.trials;
  cfg.steps = a.steps;
  cfg.max_neurons = a.max_neurons;
  cfg.input_amp = a.input_amp;
  cfg.slack = a.slack;
  cfg.solver = {ltc::solver_method_from_string(a.solver), a.rtol, a.atol};
  cfg.seed = a.seed;

  ltc::BoundsReport rep = ltc::fuzz_verify(cfg);

  json j;
  j["trials"] = rep.trials;
  j["samples_tested"] = rep.samples_tested;
  j["solver_failures"] = rep.solver_failures;
  j["max_input_magnitude"] = rep.max_input_magnitude;
  j["slack"] = rep.slack;
  j["violations"] = json::array();
  for (const auto& v : rep.violations)
    j["violations"].push_back({{"trial", v.trial},
                               {"neuron", v.neuron},
                               {"time", v.time},
                               {"value", v.value},
                               {"lo", v.lo},
                               {"hi", v.hi},
                               {"margin", v.margin},
                               {"kind", v.kind}});
  json tau = json::array(), state = json::array();
  for (const auto& iv : rep.tau_intervals) tau.push_back({{"lo", iv.lo}, {"hi", iv.hi}});
  for (const auto& iv : rep.state_intervals) state.push_back({{"lo", iv.lo}, {"hi", iv.hi}});
  j["tau_intervals_first_trial"] = tau;
  j["state_intervals_first_trial"] = state;
  j["pass"] = rep.pass();
  std::ofstream(ctx.file("bounds.json")) << j.dump(2) << '\n';
  ctx.write_manifest(a.seed);

  std::cout << "tested " << rep.samples_tested << " states over " << rep.trials << " trials: "
            << rep.violations.size() << " violations, " << rep.solver_failures
            << " solver failures\n";
  return rep.pass() ? kExitOk : kExitViolations;
}

int run_cli(const std::vector<std::string>& args);

int run_replay(const std::string& manifest_path, const std::string& out) {
  json m;
  std::ifstream in(manifest_path);
  if (!in) throw ltc::ParameterError("replay: cannot open " + manifest_path);
  in >> m;
  std::vector<std::string> args = m.at("argv").get<std::vector<std::string>>();
  // strip any prior --out and substitute the new one
  std::vector<std::string> cleaned;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--out") {
      ++i;
      continue;
    }
    cleaned.push_back(args[i]);
  }
  if (!out.empty()) {
    cleaned.push_back("--out");
    cleaned.push_back(out);
  }
  return run_cli(cleaned);
}

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"continuous-time recurrent network engine"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* t = app.add_subcommand("train", "fit a model on a CSV time series");
  t->add_option("--model", train.model, "node | ctrnn | ltc")->capture_default_str();
  t->add_option("--data", train.data, "CSV file")->required();
  t->add_option("--features", train.features, "comma-separated feature columns")->required();
  t->add_option("--targets", train.targets, "comma-separated target columns")->required();
  t->add_option("--solver", train.solver, "euler | rk4 | fused (default per model)");
  t->add_option("--loss", train.loss, "mse | ce | wce")->capture_default_str();
  t->add_option("--class-weights", train.class_weights, "comma-separated, for wce");
  t->add_option("--activation", train.activation)->capture_default_str();
  t->add_option("--missing", train.missing, "zero | ffill | error")->capture_default_str();
  t->add_option("--ratios", train.ratios)->capture_default_str();
  t->add_option("--units", train.units)->capture_default_str();
  t->add_option("--batch", train.batch)->capture_default_str();
  t->add_option("--lr", train.lr)->capture_default_str();
  t->add_option("--substeps", train.substeps, "ODE solver steps per input sample")
      ->capture_default_str();
  t->add_option("--bptt", train.bptt)->capture_default_str();
  t->add_option("--epochs", train.epochs)->capture_default_str();
  t->add_option("--window", train.window)->capture_default_str();
  t->add_option("--stride", train.stride)->capture_default_str();
  t->add_option("--sample-period", train.sample_period)->capture_default_str();
  t->add_flag("--no-normalize", train.no_normalize, "skip feature whitening");
  t->add_option("--seed", train.seed)->capture_default_str();
  t->add_option("--out", train.out, "output directory");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "evaluate a checkpoint on a CSV file");
  e->add_option("--checkpoint", eval.checkpoint)->required();
  e->add_option("--data", eval.data)->required();
  e->add_option("--features", eval.features)->required();
  e->add_option("--targets", eval.targets)->required();
  e->add_option("--metric", eval.metric, "mse | accuracy | f1")->capture_default_str();
  e->add_option("--missing", eval.missing)->capture_default_str();
  e->add_option("--norm", eval.norm, "normalization stats (default: next to checkpoint)");
  e->add_option("--stride", eval.stride)->capture_default_str();
  e->add_option("--out", eval.out);

  SweepArgs sweep;
  auto add_sweep_options = [&](CLI::App* cmd) {
    cmd->add_option("--models", sweep.models)->capture_default_str();
    cmd->add_option("--activation", sweep.activation)->capture_default_str();
    cmd->add_option("--width", sweep.width)->capture_default_str();
    cmd->add_option("--layers", sweep.layers)->capture_default_str();
    cmd->add_option("--sw2", sweep.sw2, "weight variance")->capture_default_str();
    cmd->add_option("--sb2", sweep.sb2, "bias variance")->capture_default_str();
    cmd->add_option("--trials", sweep.trials)->capture_default_str();
    cmd->add_option("--dt", sweep.dt, "input sampling period")->capture_default_str();
    cmd->add_option("--samples", sweep.samples)->capture_default_str();
    cmd->add_option("--solver", sweep.solver)->capture_default_str();
    cmd->add_option("--rtol", sweep.rtol)->capture_default_str();
    cmd->add_option("--atol", sweep.atol)->capture_default_str();
    cmd->add_option("--substeps", sweep.substeps)->capture_default_str();
    cmd->add_option("--seed", sweep.seed)->capture_default_str();
    cmd->add_option("--out", sweep.out);
  };
  auto* x = app.add_subcommand("expressivity", "trajectory-length sweep on the circular probe");
  add_sweep_options(x);
  x->add_flag("--measure-depth", sweep.measure_depth,
              "also measure solver depth and report relative bounds");
  x->add_flag("--dump-latent", sweep.dump_latent, "write the 2-D latent polylines per trial");
  auto* d = app.add_subcommand("depth", "adaptive-solver steps per input sample");
  add_sweep_options(d);
  auto* sc = app.add_subcommand("solver-compare", "ltc trajectory length: dopri45 vs fused");
  add_sweep_options(sc);

  BoundsArgs bounds;
  auto* b = app.add_subcommand("bounds", "fuzz the state and time-constant guarantees");
  b->add_option("--trials", bounds.trials)->capture_default_str();
  b->add_option("--steps", bounds.steps)->capture_default_str();
  b->add_option("--max-neurons", bounds.max_neurons)->capture_default_str();
  b->add_option("--input-amp", bounds.input_amp)->capture_default_str();
  b->add_option("--slack", bounds.slack)->capture_default_str();
  b->add_option("--solver", bounds.solver, "fused | dopri45")->capture_default_str();
  b->add_option("--rtol", bounds.rtol)->capture_default_str();
  b->add_option("--atol", bounds.atol)->capture_default_str();
  b->add_option("--seed", bounds.seed)->capture_default_str();
  b->add_option("--out", bounds.out);

  std::string replay_manifest, replay_out;
  auto* r = app.add_subcommand("replay", "re-run a recorded manifest");
  r->add_option("--manifest", replay_manifest)->required();
  r->add_option("--out", replay_out, "fresh output directory for the replayed run");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& pe) {
    if (pe.get_exit_code() == 0) {
      app.exit(pe);
      return kExitOk;
    }
    std::cerr << pe.what() << "\n";
    return kExitUsage;
  }

  try {
    if (r->parsed()) return run_replay(replay_manifest, replay_out);

    RunContext ctx;
    ctx.argv = args;
    std::string out_override;
    if (t->parsed()) {
      ctx.command = "train";
      out_override = train.out;
    } else if (e->parsed()) {
      ctx.command = "eval";
      out_override = eval.out;
    } else if (x->parsed() || d->parsed() || sc->parsed()) {
      ctx.command = x->parsed() ? "expressivity" : (d->parsed() ? "depth" : "solver-compare");
      out_override = sweep.out;
    } else if (b->parsed()) {
      ctx.command = "bounds";
      out_override = bounds.out;
    }
    ctx.out_dir = out_override.empty() ? default_out_dir(ctx.command) : fs::path(out_override);
    fs::create_directories(ctx.out_dir);

    json cfg_echo = json::object();
    for (const CLI::App* sub : {t, e, x, d, sc, b})
      if (sub->parsed())
        for (const CLI::Option* opt : sub->get_options())
          if (!opt->get_name().empty() && opt->count() > 0)
            cfg_echo[opt->get_name()] = opt->results().size() == 1 ? json(opt->results()[0])
                                                                   : json(opt->results());
    ctx.config = cfg_echo;

    if (t->parsed()) return run_train(train, ctx);
    if (e->parsed()) return run_eval(eval, ctx);
    if (x->parsed()) return run_expressivity(sweep, ctx);
    if (d->parsed()) return run_depth(sweep, ctx);
    if (sc->parsed()) return run_solver_compare(sweep, ctx);
    if (b->parsed()) return run_bounds(bounds, ctx);
    std::cerr << "no command given\n";
    return kExitUsage;
  } catch (const ltc::ParameterError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const ltc::SchemaError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const ltc::ParseError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const ltc::VersionError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const ltc::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args);
}
