#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"
#include "ltc/errors.hpp"
#include "ltc/train.hpp"

namespace ltc {

namespace detail {

// Doubles are stored as C99 hex-float strings so every bit survives the
// round trip.
inline std::string double_to_hex(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

inline double hex_to_double(const std::string& s) {
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') throw ParseError("checkpoint: bad float literal '" + s + "'");
  return v;
}

inline nlohmann::json vec_to_json(const Vec& v) {
  nlohmann::json a = nlohmann::json::array();
  for (double x : v) a.push_back(double_to_hex(x));
  return a;
}

inline Vec vec_from_json(const nlohmann::json& a) {
  Vec v;
  v.reserve(a.size());
  for (const auto& x : a) v.push_back(hex_to_double(x.get<std::string>()));
  return v;
}

inline nlohmann::json matrix_to_json(const Matrix& m) {
  return {{"rows", m.rows}, {"cols", m.cols}, {"data", vec_to_json(m.data)}};
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
  Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  m.data = vec_from_json(j.at("data"));
  if (m.data.size() != m.rows * m.cols) throw SchemaError("checkpoint: matrix size mismatch");
  return m;
}

}  // namespace detail

inline nlohmann::json checkpoint_to_json(const Checkpoint& ck) {
  using detail::double_to_hex;
  nlohmann::json j;
  j["format_version"] = ck.format_version;
  j["cell_kind"] = to_string(ck.kind);
  j["rng_algorithm"] = ck.rng_algorithm;
  j["best_validation_metric"] = double_to_hex(ck.best_validation_metric);

  nlohmann::json p;
  p["n"] = ck.params.n;
  p["m"] = ck.params.m;
  p["activation"] = to_string(ck.params.activation);
  p["tau"] = detail::vec_to_json(ck.params.tau);
  p["mu"] = detail::vec_to_json(ck.params.mu);
  p["a_vec"] = detail::vec_to_json(ck.params.a_vec);
  p["gamma"] = detail::matrix_to_json(ck.params.gamma);
  p["gamma_r"] = detail::matrix_to_json(ck.params.gamma_r);
  j["params"] = p;

  j["head"] = {{"w_out", detail::matrix_to_json(ck.head.w_out)},
               {"b_out", detail::vec_to_json(ck.head.b_out)}};

  const TrainingConfig& c = ck.config;
  nlohmann::json cfg;
  cfg["hidden_units"] = c.hidden_units;
  cfg["minibatch"] = c.minibatch;
  cfg["learning_rate"] = double_to_hex(c.learning_rate);
  cfg["solver_substeps"] = c.solver_substeps;
  cfg["bptt_length"] = c.bptt_length;
  cfg["epochs"] = c.epochs;
  cfg["adam_beta1"] = double_to_hex(c.adam.beta1);
  cfg["adam_beta2"] = double_to_hex(c.adam.beta2);
  cfg["adam_epsilon"] = double_to_hex(c.adam.epsilon);
  cfg["loss"] = to_string(c.loss);
  cfg["class_weights"] = detail::vec_to_json(c.class_weights);
  cfg["seed"] = std::to_string(c.seed);
  cfg["sample_period"] = double_to_hex(c.sample_period);
  cfg["solver"] = to_string(c.solver);
  cfg["optimizer"] = c.optimizer == OptimizerKind::Adam ? "adam" : "sgd";
  cfg["grad_clip"] = double_to_hex(c.grad_clip);
  cfg["activation"] = to_string(c.activation);
  cfg["outputs"] = c.outputs;
  j["config"] = cfg;
  return j;
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  Checkpoint ck;
  ck.format_version = j.at("format_version").get<int>();
  if (ck.format_version != 1)
    throw VersionError("checkpoint: unsupported format_version " +
                       std::to_string(ck.format_version));
  ck.kind = cell_kind_from_string(j.at("cell_kind").get<std::string>());
  ck.rng_algorithm = j.at("rng_algorithm").get<std::string>();
  ck.best_validation_metric =
      detail::hex_to_double(j.at("best_validation_metric").get<std::string>());

  const auto& p = j.at("params");
  ck.params.n = p.at("n").get<std::size_t>();
  ck.params.m = p.at("m").get<std::size_t>();
  ck.params.activation = activation_from_string(p.at("activation").get<std::string>());
  ck.params.tau = detail::vec_from_json(p.at("tau"));
  ck.params.mu = detail::vec_from_json(p.at("mu"));
  ck.params.a_vec = detail::vec_from_json(p.at("a_vec"));
  ck.params.gamma = detail::matrix_from_json(p.at("gamma"));
  ck.params.gamma_r = detail::matrix_from_json(p.at("gamma_r"));

  ck.head.w_out = detail::matrix_from_json(j.at("head").at("w_out"));
  ck.head.b_out = detail::vec_from_json(j.at("head").at("b_out"));

  const auto& cfg = j.at("config");
  TrainingConfig& c = ck.config;
  c.hidden_units = cfg.at("hidden_units").get<std::size_t>();
  c.minibatch = cfg.at("minibatch").get<std::size_t>();
  c.learning_rate = detail::hex_to_double(cfg.at("learning_rate").get<std::string>());
  c.solver_substeps = cfg.at("solver_substeps").get<std::size_t>();
  c.bptt_length = cfg.at("bptt_length").get<std::size_t>();
  c.epochs = cfg.at("epochs").get<std::size_t>();
  c.adam.beta1 = detail::hex_to_double(cfg.at("adam_beta1").get<std::string>());
  c.adam.beta2 = detail::hex_to_double(cfg.at("adam_beta2").get<std::string>());
  c.adam.epsilon = detail::hex_to_double(cfg.at("adam_epsilon").get<std::string>());
  c.loss = loss_kind_from_string(cfg.at("loss").get<std::string>());
  c.class_weights = detail::vec_from_json(cfg.at("class_weights"));
  c.seed = std::stoull(cfg.at("seed").get<std::string>());
  c.sample_period = detail::hex_to_double(cfg.at("sample_period").get<std::string>());
  c.solver = solver_method_from_string(cfg.at("solver").get<std::string>());
  c.optimizer =
      cfg.at("optimizer").get<std::string>() == "adam" ? OptimizerKind::Adam : OptimizerKind::Sgd;
  c.grad_clip = detail::hex_to_double(cfg.at("grad_clip").get<std::string>());
  c.activation = activation_from_string(cfg.at("activation").get<std::string>());
  c.outputs = cfg.at("outputs").get<std::size_t>();

  validate_cell(ck.params);
  if (ck.head.w_out.rows != ck.params.n || ck.head.w_out.cols != ck.head.b_out.size())
    throw SchemaError("checkpoint: output head shape mismatch");
  return ck;
}

inline void checkpoint_save(const std::filesystem::path& path, const Checkpoint& ck) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError("checkpoint_save: cannot open " + path.string());
  out << checkpoint_to_json(ck).dump(2) << '\n';
  if (!out) throw ParameterError("checkpoint_save: write failed for " + path.string());
}

inline Checkpoint checkpoint_load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParameterError("checkpoint_load: cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("checkpoint_load: " + std::string(e.what()));
  }
  try {
    return checkpoint_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("checkpoint_load: " + std::string(e.what()));
  }
}

}  // namespace ltc
