#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ltc/loss.hpp"
#include "ltc/rng.hpp"
#include "ltc/train.hpp"

using namespace ltc;

namespace {

struct GradCheckSetup {
  CellKind kind;
  SolverKind::Method solver;
  CellParams params;
  OutputHead head;
  std::vector<Window> batch;
  LossSpec loss;
  std::size_t L;
  double dt;
};

GradCheckSetup random_setup(Rng& rng, CellKind kind, LossKind loss_kind, Activation act) {
  GradCheckSetup s;
  s.kind = kind;
  switch (kind) {
    case CellKind::NeuralOde: s.solver = SolverKind::Method::Rk4; break;
    case CellKind::CtRnn: s.solver = SolverKind::Method::Euler; break;
    case CellKind::Ltc: s.solver = SolverKind::Method::Fused; break;
  }
  const std::size_t n = 2 + rng.next_below(7);   // <= 8
  const std::size_t m = 1 + rng.next_below(3);
  const std::size_t T = 1 + rng.next_below(5);   // <= 5
  s.L = 1 + rng.next_below(3);                   // <= 3
  s.dt = rng.uniform(0.05, 0.2);

  s.params = init_training_cell(kind, n, m, act, rng);
  const std::size_t outputs = loss_kind == LossKind::Mse ? 1 + rng.next_below(3) : 3;
  s.head.w_out = Matrix(n, outputs);
  for (auto& v : s.head.w_out.data) v = 0.3 * rng.next_gaussian();
  s.head.b_out.resize(outputs);
  for (auto& v : s.head.b_out) v = 0.1 * rng.next_gaussian();

  const std::size_t B = 1 + rng.next_below(2);
  for (std::size_t b = 0; b < B; ++b) {
    Window w;
    w.inputs = Matrix(T, m);
    for (auto& v : w.inputs.data) v = rng.next_gaussian();
    if (loss_kind == LossKind::Mse) {
      w.targets = Matrix(T, outputs);
      for (auto& v : w.targets.data) v = rng.next_gaussian();
    } else {
      w.targets = Matrix(T, 1);
      for (std::size_t t = 0; t < T; ++t)
        w.targets(t, 0) = static_cast<double>(rng.next_below(outputs));
    }
    s.batch.push_back(std::move(w));
  }
  s.loss.kind = loss_kind;
  return s;
}

double setup_loss(const GradCheckSetup& s, const CellParams& p, const OutputHead& h) {
  double total = 0.0;
  for (const Window& w : s.batch)
    total += loss_eval(s.loss, predict_window(s.kind, p, h, s.solver, w, s.L, s.dt), w.targets);
  return total / static_cast<double>(s.batch.size());
}

// Central finite differences over every parameter coordinate.
double max_rel_error(const GradCheckSetup& s, const ParamGrads& grads) {
  const double h = 1e-5;
  double worst = 0.0;
  auto check_coord = [&](double* coord, double analytic) {
    const double saved = *coord;
    *coord = saved + h;
    const double up = setup_loss(s, s.params, s.head);
    *coord = saved - h;
    const double down = setup_loss(s, s.params, s.head);
    *coord = saved;
    const double fd = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(analytic), std::abs(fd), 1e-8});
    double err;
    if (std::abs(analytic) < 1e-8 && std::abs(fd) < 1e-8)
      err = 0.0;  // both negligible: compare absolutely at the floor
    else
      err = std::abs(analytic - fd) / denom;
    worst = std::max(worst, err);
  };
  auto& mp = const_cast<CellParams&>(s.params);
  auto& mh = const_cast<OutputHead&>(s.head);
  for (std::size_t i = 0; i < mp.tau.size(); ++i) check_coord(&mp.tau[i], grads.tau[i]);
  for (std::size_t i = 0; i < mp.mu.size(); ++i) check_coord(&mp.mu[i], grads.mu[i]);
  for (std::size_t i = 0; i < mp.a_vec.size(); ++i) check_coord(&mp.a_vec[i], grads.a[i]);
  for (std::size_t i = 0; i < mp.gamma.data.size(); ++i)
    check_coord(&mp.gamma.data[i], grads.gamma.data[i]);
  for (std::size_t i = 0; i < mp.gamma_r.data.size(); ++i)
    check_coord(&mp.gamma_r.data[i], grads.gamma_r.data[i]);
  for (std::size_t i = 0; i < mh.w_out.data.size(); ++i)
    check_coord(&mh.w_out.data[i], grads.w_out.data[i]);
  for (std::size_t i = 0; i < mh.b_out.size(); ++i) check_coord(&mh.b_out[i], grads.b_out[i]);
  return worst;
}

}  // namespace

TEST_CASE("loss_eval: mse of perfect predictions is zero", "[training]") {
  Matrix preds(4, 2);
  for (std::size_t i = 0; i < preds.data.size(); ++i) preds.data[i] = 0.37 * (i + 1);
  CHECK(loss_eval({LossKind::Mse, {}}, preds, preds) == 0.0);
}

TEST_CASE("loss_eval: uniform logits give ln C per step", "[training]") {
  Matrix preds(3, 5, 0.42);
  Matrix targets(3, 1);
  targets(0, 0) = 0;
  targets(1, 0) = 3;
  targets(2, 0) = 4;
  CHECK(loss_eval({LossKind::CrossEntropy, {}}, preds, targets) ==
        Catch::Approx(3.0 * std::log(5.0)).epsilon(1e-12));
}

TEST_CASE("loss_eval: class weights scale linearly", "[training]") {
  Matrix preds(4, 2);
  for (std::size_t t = 0; t < 4; ++t) {
    preds(t, 0) = 2.0;  // model favors class 0
    preds(t, 1) = -1.0;
  }
  Matrix targets(4, 1, 1.0);  // all minority, all predicted wrong
  const double unweighted = loss_eval({LossKind::CrossEntropy, {}}, preds, targets);
  const double weighted =
      loss_eval({LossKind::WeightedCrossEntropy, {1.0, 15.0}}, preds, targets);
  CHECK(weighted == Catch::Approx(15.0 * unweighted).epsilon(1e-12));
}

TEST_CASE("loss_eval: label out of range rejected", "[training]") {
  Matrix preds(2, 3);
  Matrix targets(2, 1);
  targets(1, 0) = 3;  // classes are 0..2
  CHECK_THROWS_AS(loss_eval({LossKind::CrossEntropy, {}}, preds, targets), ParameterError);
  targets(1, 0) = 1.5;
  CHECK_THROWS_AS(loss_eval({LossKind::CrossEntropy, {}}, preds, targets), ParameterError);
}

TEST_CASE("loss_eval: log-sum-exp stays stable for huge logits", "[training]") {
  Matrix preds(1, 2);
  preds(0, 0) = 1e4;
  preds(0, 1) = -1e4;
  Matrix targets(1, 1, 0.0);
  const double v = loss_eval({LossKind::CrossEntropy, {}}, preds, targets);
  CHECK(std::isfinite(v));
  CHECK(v >= 0.0);
}

TEST_CASE("forward_unroll: zero head predicts the bias", "[training]") {
  Rng rng(60);
  CellParams p = init_training_cell(CellKind::Ltc, 4, 2, Activation::Sigmoid, rng);
  OutputHead head{Matrix(4, 2), {0.7, -0.3}};
  Window w;
  w.inputs = Matrix(3, 2, 0.5);
  w.targets = Matrix(3, 2);
  auto cache = forward_unroll(CellKind::Ltc, p, head, SolverKind::Method::Fused, {{w}}, 2, 0.1);
  for (std::size_t t = 0; t < 3; ++t) {
    CHECK(cache.predictions[0](t, 0) == 0.7);
    CHECK(cache.predictions[0](t, 1) == -0.3);
  }
}

TEST_CASE("forward_unroll: single step equals one solver step plus readout", "[training]") {
  Rng rng(61);
  CellParams p = init_training_cell(CellKind::Ltc, 3, 2, Activation::Sigmoid, rng);
  OutputHead head{Matrix(3, 1), {0.0}};
  for (auto& v : head.w_out.data) v = rng.next_gaussian();
  Window w;
  w.inputs = Matrix(1, 2);
  w.inputs(0, 0) = 0.4;
  w.inputs(0, 1) = -0.6;
  w.targets = Matrix(1, 1);
  auto cache = forward_unroll(CellKind::Ltc, p, head, SolverKind::Method::Fused, {{w}}, 1, 0.1);
  Vec x = fused_step(Vec(3, 0.0), Vec{0.4, -0.6}, 0.1, p);
  double expect = 0.0;
  for (std::size_t i = 0; i < 3; ++i) expect += head.w_out(i, 0) * x[i];
  CHECK(cache.predictions[0](0, 0) == Catch::Approx(expect).margin(1e-15));
}

TEST_CASE("forward_unroll: cache holds T*L sub-step states per sequence", "[training]") {
  Rng rng(62);
  CellParams p = init_training_cell(CellKind::CtRnn, 4, 2, Activation::Tanh, rng);
  OutputHead head{Matrix(4, 1), {0.0}};
  Window w;
  w.inputs = Matrix(7, 2, 0.1);
  w.targets = Matrix(7, 1);
  auto cache = forward_unroll(CellKind::CtRnn, p, head, SolverKind::Method::Euler, {{w}}, 3, 0.05);
  CHECK(cache.states[0].size() == 7 * 3 + 1);
}

TEST_CASE("forward_unroll: dopri45 rejected for training", "[training]") {
  Rng rng(63);
  CellParams p = init_training_cell(CellKind::Ltc, 3, 1, Activation::Sigmoid, rng);
  OutputHead head{Matrix(3, 1), {0.0}};
  Window w;
  w.inputs = Matrix(2, 1, 0.1);
  w.targets = Matrix(2, 1);
  CHECK_THROWS_AS(
      forward_unroll(CellKind::Ltc, p, head, SolverKind::Method::Dopri45, {{w}}, 1, 0.1),
      ParameterError);
}

TEST_CASE("bptt_gradients: zero at a zero-loss stationary point", "[training]") {
  // head reads a constant zero state: zero weights everywhere, targets = bias
  CellParams p;
  p.n = 3;
  p.m = 1;
  p.activation = Activation::Tanh;
  p.gamma = Matrix(1, 3);
  p.gamma_r = Matrix(3, 3);
  p.mu.assign(3, 0.0);
  p.tau.assign(3, 1.0);
  p.a_vec.assign(3, 0.0);
  OutputHead head{Matrix(3, 1), {0.25}};
  Window w;
  w.inputs = Matrix(4, 1);
  w.targets = Matrix(4, 1, 0.25);
  auto cache = forward_unroll(CellKind::NeuralOde, p, head, SolverKind::Method::Euler, {{w}}, 2, 0.1);
  ParamGrads grads;
  const double loss = bptt_gradients(cache, p, head, {{w}}, {LossKind::Mse, {}}, grads);
  CHECK(loss == 0.0);
  grads.for_each([](Vec& v) {
    for (double g : v) CHECK(g == 0.0);
  });
}

TEST_CASE("bptt_gradients: matches central finite differences", "[training]") {
  Rng rng(64);
  int config = 0;
  for (CellKind kind : {CellKind::NeuralOde, CellKind::CtRnn, CellKind::Ltc}) {
    for (LossKind lk : {LossKind::Mse, LossKind::CrossEntropy}) {
      for (int rep = 0; rep < 3; ++rep) {
        Activation act = (config++ % 2 == 0) ? Activation::Tanh : Activation::Sigmoid;
        GradCheckSetup s = random_setup(rng, kind, lk, act);
        auto cache = forward_unroll(s.kind, s.params, s.head, s.solver, s.batch, s.L, s.dt);
        ParamGrads grads;
        bptt_gradients(cache, s.params, s.head, s.batch, s.loss, grads);
        INFO("kind=" << to_string(kind) << " loss=" << to_string(lk) << " rep=" << rep);
        CHECK(max_rel_error(s, grads) < 1e-4);
      }
    }
  }
}

TEST_CASE("bptt_gradients: linear-regime model matches the analytic gradient", "[training]") {
  // hard-tanh inside its identity region with L=1 euler: one linear map.
  // y = w^T (x0 + dt*(gr^T x0 + g^T i + mu)) + b with x0 = 0.
  const double dt = 0.05;
  CellParams p;
  p.n = 2;
  p.m = 1;
  p.activation = Activation::HardTanh;
  p.gamma = Matrix(1, 2);
  p.gamma(0, 0) = 0.3;
  p.gamma(0, 1) = -0.2;
  p.gamma_r = Matrix(2, 2);
  p.mu = {0.05, -0.1};
  p.tau = {1.0, 1.0};
  p.a_vec = {0.0, 0.0};
  OutputHead head{Matrix(2, 1), {0.1}};
  head.w_out(0, 0) = 0.7;
  head.w_out(1, 0) = -0.4;
  Window w;
  w.inputs = Matrix(1, 1);
  w.inputs(0, 0) = 0.6;
  w.targets = Matrix(1, 1);
  w.targets(0, 0) = 0.9;

  auto cache =
      forward_unroll(CellKind::NeuralOde, p, head, SolverKind::Method::Euler, {{w}}, 1, dt);
  ParamGrads grads;
  bptt_gradients(cache, p, head, {{w}}, {LossKind::Mse, {}}, grads);

  // analytic least-squares gradient, derived by hand for the linear map
  const double i0 = 0.6;
  const double x1 = dt * (p.gamma(0, 0) * i0 + p.mu[0]);
  const double x2 = dt * (p.gamma(0, 1) * i0 + p.mu[1]);
  const double pred = head.w_out(0, 0) * x1 + head.w_out(1, 0) * x2 + head.b_out[0];
  const double r = 2.0 * (pred - w.targets(0, 0));
  CHECK(grads.b_out[0] == Catch::Approx(r).margin(1e-8));
  CHECK(grads.w_out(0, 0) == Catch::Approx(r * x1).margin(1e-8));
  CHECK(grads.w_out(1, 0) == Catch::Approx(r * x2).margin(1e-8));
  CHECK(grads.mu[0] == Catch::Approx(r * head.w_out(0, 0) * dt).margin(1e-8));
  CHECK(grads.mu[1] == Catch::Approx(r * head.w_out(1, 0) * dt).margin(1e-8));
  CHECK(grads.gamma.data[0] == Catch::Approx(r * head.w_out(0, 0) * dt * i0).margin(1e-8));
  CHECK(grads.gamma.data[1] == Catch::Approx(r * head.w_out(1, 0) * dt * i0).margin(1e-8));
}

TEST_CASE("bptt_gradients: cache/config mismatch rejected", "[training]") {
  Rng rng(65);
  CellParams p = init_training_cell(CellKind::Ltc, 3, 1, Activation::Sigmoid, rng);
  OutputHead head{Matrix(3, 1), {0.0}};
  Window w;
  w.inputs = Matrix(2, 1, 0.1);
  w.targets = Matrix(2, 1);
  auto cache = forward_unroll(CellKind::Ltc, p, head, SolverKind::Method::Fused, {{w}}, 1, 0.1);
  CellParams other = init_training_cell(CellKind::Ltc, 4, 1, Activation::Sigmoid, rng);
  ParamGrads grads;
  CHECK_THROWS_AS(bptt_gradients(cache, other, head, {{w}}, {LossKind::Mse, {}}, grads),
                  ParameterError);
}

TEST_CASE("adam_update: zero gradient leaves parameters unchanged", "[training]") {
  Rng rng(66);
  CellParams p = init_training_cell(CellKind::Ltc, 3, 2, Activation::Sigmoid, rng);
  OutputHead head{Matrix(3, 1), {0.4}};
  CellParams before = p;
  ParamGrads zero = ParamGrads::zeros_like(p, head);
  AdamState st = AdamState::zeros_like(p, head);
  CHECK(adam_update(p, head, zero, st, 1, {}, 0.01));
  CHECK(p.tau == before.tau);
  CHECK(p.gamma.data == before.gamma.data);
  CHECK(head.b_out[0] == 0.4);
}

TEST_CASE("adam_update: first step moves each coordinate by about alpha", "[training]") {
  Rng rng(67);
  CellParams p = init_training_cell(CellKind::Ltc, 2, 1, Activation::Sigmoid, rng);
  OutputHead head{Matrix(2, 1), {0.0}};
  CellParams before = p;
  ParamGrads g = ParamGrads::zeros_like(p, head);
  for (std::size_t i = 0; i < g.mu.size(); ++i) g.mu[i] = (i % 2 == 0) ? 0.37 : -1.4;
  AdamState st = AdamState::zeros_like(p, head);
  adam_update(p, head, g, st, 1, {}, 0.01);
  for (std::size_t i = 0; i < p.mu.size(); ++i) {
    const double step = before.mu[i] - p.mu[i];
    CHECK(std::abs(step) == Catch::Approx(0.01).epsilon(1e-3));
    CHECK(step * g.mu[i] > 0.0);  // moves against the gradient
  }
}

TEST_CASE("adam_update: three steps reproduce the hand recursion", "[training]") {
  // scalar recursion computed longhand: alpha=0.1, b1=0.9, b2=0.999,
  // eps=1e-8, g=0.3, theta0=1.0
  CellParams p;
  p.n = 1;
  p.m = 1;
  p.activation = Activation::Sigmoid;
  p.gamma = Matrix(1, 1);
  p.gamma_r = Matrix(1, 1);
  p.mu = {1.0};
  p.tau = {1.0};
  p.a_vec = {0.0};
  OutputHead head{Matrix(1, 1), {0.0}};
  ParamGrads g = ParamGrads::zeros_like(p, head);
  g.mu[0] = 0.3;
  AdamState st = AdamState::zeros_like(p, head);
  AdamConfig cfg;  // 0.9 / 0.999 / 1e-8

  double theta = 1.0, m = 0.0, v = 0.0;
  for (std::size_t t = 1; t <= 3; ++t) {
    adam_update(p, head, g, st, t, cfg, 0.1);
    m = 0.9 * m + 0.1 * 0.3;
    v = 0.999 * v + 0.001 * 0.09;
    const double mh = m / (1.0 - std::pow(0.9, static_cast<double>(t)));
    const double vh = v / (1.0 - std::pow(0.999, static_cast<double>(t)));
    theta -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
    CHECK(p.mu[0] == Catch::Approx(theta).margin(1e-12));
  }
}

TEST_CASE("adam_update: non-finite gradients skip the update", "[training]") {
  Rng rng(68);
  CellParams p = init_training_cell(CellKind::Ltc, 2, 1, Activation::Sigmoid, rng);
  OutputHead head{Matrix(2, 1), {0.0}};
  CellParams before = p;
  ParamGrads g = ParamGrads::zeros_like(p, head);
  g.mu[0] = std::numeric_limits<double>::quiet_NaN();
  AdamState st = AdamState::zeros_like(p, head);
  CHECK_FALSE(adam_update(p, head, g, st, 1, {}, 0.01));
  CHECK(p.mu == before.mu);
}

TEST_CASE("adam_update: tau clamped positive", "[training]") {
  CellParams p;
  p.n = 1;
  p.m = 1;
  p.activation = Activation::Sigmoid;
  p.gamma = Matrix(1, 1);
  p.gamma_r = Matrix(1, 1);
  p.mu = {0.0};
  p.tau = {1e-6};
  p.a_vec = {0.0};
  OutputHead head{Matrix(1, 1), {0.0}};
  ParamGrads g = ParamGrads::zeros_like(p, head);
  g.tau[0] = 1.0;  // pushes tau negative
  AdamState st = AdamState::zeros_like(p, head);
  adam_update(p, head, g, st, 1, {}, 0.1);
  CHECK(p.tau[0] >= 1e-6);
}

TEST_CASE("head-only training on a convex readout decreases the loss", "[training]") {
  // freeze cell parameters (zero weights -> constant state), train the head:
  // this is least squares, so small-step gradient descent never increases it
  CellParams p;
  p.n = 2;
  p.m = 1;
  p.activation = Activation::Sigmoid;
  p.gamma = Matrix(1, 2);
  p.gamma_r = Matrix(2, 2);
  p.mu = {0.3, -0.7};
  p.tau = {1.0, 2.0};
  p.a_vec = {0.5, 1.0};
  OutputHead head{Matrix(2, 1), {0.0}};
  Window w;
  w.inputs = Matrix(6, 1, 0.0);
  w.targets = Matrix(6, 1, 0.8);
  std::vector<Window> batch{w};
  LossSpec spec{LossKind::Mse, {}};
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 40; ++it) {
    auto cache = forward_unroll(CellKind::Ltc, p, head, SolverKind::Method::Fused, batch, 2, 0.1);
    ParamGrads grads;
    const double loss = bptt_gradients(cache, p, head, batch, spec, grads);
    CHECK(loss <= prev + 1e-12);
    prev = loss;
    for (std::size_t i = 0; i < head.w_out.data.size(); ++i)
      head.w_out.data[i] -= 0.05 * grads.w_out.data[i];
    for (std::size_t i = 0; i < head.b_out.size(); ++i)
      head.b_out[i] -= 0.05 * grads.b_out[i];
  }
  CHECK(prev < 0.01);
}

TEST_CASE("train_loop: epochs=0 evaluates once and returns the start", "[training]") {
  Rng rng(69);
  std::vector<Window> windows;
  for (int i = 0; i < 4; ++i) {
    Window w;
    w.inputs = Matrix(5, 1);
    w.targets = Matrix(5, 1);
    for (std::size_t t = 0; t < 5; ++t) {
      w.inputs(t, 0) = rng.next_gaussian();
      w.targets(t, 0) = rng.next_gaussian();
    }
    windows.push_back(std::move(w));
  }
  TrainingConfig cfg;
  cfg.hidden_units = 4;
  cfg.epochs = 0;
  cfg.bptt_length = 5;
  cfg.seed = 7;
  TrainResult res = train_loop(windows, windows, CellKind::Ltc, cfg);
  REQUIRE(res.log.size() == 1);
  CHECK(res.log[0].epoch == 0);
  CHECK(res.best.best_validation_metric == res.log[0].val_metric);
}

TEST_CASE("train_loop: identical seeds give identical logs", "[training]") {
  Rng rng(70);
  std::vector<Window> train, val;
  for (int i = 0; i < 6; ++i) {
    Window w;
    w.inputs = Matrix(8, 2);
    w.targets = Matrix(8, 1);
    for (auto& v : w.inputs.data) v = rng.next_gaussian();
    for (auto& v : w.targets.data) v = rng.next_gaussian();
    (i < 4 ? train : val).push_back(std::move(w));
  }
  TrainingConfig cfg;
  cfg.hidden_units = 6;
  cfg.epochs = 3;
  cfg.minibatch = 2;
  cfg.bptt_length = 8;
  cfg.seed = 123;
  TrainResult a = train_loop(train, val, CellKind::Ltc, cfg);
  TrainResult b = train_loop(train, val, CellKind::Ltc, cfg);
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].train_loss == b.log[i].train_loss);
    CHECK(a.log[i].val_metric == b.log[i].val_metric);
  }
}

TEST_CASE("mixed-length windows in one batch: short sequences only count their steps",
          "[training]") {
  Rng rng(71);
  CellParams p = init_training_cell(CellKind::Ltc, 3, 1, Activation::Sigmoid, rng);
  OutputHead head{Matrix(3, 1), {0.0}};
  for (auto& v : head.w_out.data) v = rng.next_gaussian();

  Window longer, shorter;
  longer.inputs = Matrix(5, 1);
  longer.targets = Matrix(5, 1);
  for (auto& v : longer.inputs.data) v = rng.next_gaussian();
  for (auto& v : longer.targets.data) v = rng.next_gaussian();
  shorter.inputs = Matrix(2, 1);
  shorter.targets = Matrix(2, 1);
  for (auto& v : shorter.inputs.data) v = rng.next_gaussian();
  for (auto& v : shorter.targets.data) v = rng.next_gaussian();

  std::vector<Window> batch{longer, shorter};
  LossSpec spec{LossKind::Mse, {}};
  auto cache = forward_unroll(CellKind::Ltc, p, head, SolverKind::Method::Fused, batch, 2, 0.1);
  CHECK(cache.states[0].size() == 5 * 2 + 1);
  CHECK(cache.states[1].size() == 2 * 2 + 1);
  ParamGrads grads;
  const double loss = bptt_gradients(cache, p, head, batch, spec, grads);

  // batch loss equals the average of the per-window losses
  const double l0 = loss_eval(
      spec, predict_window(CellKind::Ltc, p, head, SolverKind::Method::Fused, longer, 2, 0.1),
      longer.targets);
  const double l1 = loss_eval(
      spec, predict_window(CellKind::Ltc, p, head, SolverKind::Method::Fused, shorter, 2, 0.1),
      shorter.targets);
  CHECK(loss == Catch::Approx(0.5 * (l0 + l1)).epsilon(1e-14));
}

TEST_CASE("train_loop: empty splits rejected", "[training]") {
  TrainingConfig cfg;
  CHECK_THROWS_AS(train_loop({}, {}, CellKind::Ltc, cfg), ParameterError);
}

TEST_CASE("train_loop: divergence stops early with the flag set", "[training]") {
  Rng rng(72);
  std::vector<Window> windows;
  for (int i = 0; i < 4; ++i) {
    Window w;
    w.inputs = Matrix(6, 1);
    w.targets = Matrix(6, 1);
    for (auto& v : w.inputs.data) v = rng.next_gaussian();
    for (auto& v : w.targets.data) v = rng.next_gaussian();
    windows.push_back(std::move(w));
  }
  TrainingConfig cfg;
  cfg.hidden_units = 4;
  cfg.epochs = 50;
  cfg.bptt_length = 6;
  cfg.optimizer = OptimizerKind::Sgd;
  cfg.learning_rate = 1e10;  // guaranteed blow-up
  cfg.grad_clip = 0.0;       // and no safety net
  cfg.seed = 3;
  TrainResult res = train_loop(windows, windows, CellKind::Ltc, cfg);
  CHECK(res.diverged);
  CHECK(res.log.size() < 51);  // stopped before the last epoch
}

TEST_CASE("evaluate_metric: f1 on a hand-counted confusion matrix", "[training]") {
  // all-positive predictor on a 20-sample fixture with labels 1,0,0,0,...
  // repeated: tp = 5, fp = 15, fn = 0 -> precision 0.25, recall 1, f1 = 0.4
  CellParams p;
  p.n = 1;
  p.m = 1;
  p.activation = Activation::Sigmoid;
  p.gamma = Matrix(1, 1);
  p.gamma_r = Matrix(1, 1);
  p.mu = {0.0};
  p.tau = {1.0};
  p.a_vec = {0.0};
  OutputHead head{Matrix(1, 2), {0.0, 1.0}};  // logit of class 1 always wins
  Window w;
  w.inputs = Matrix(20, 1);
  w.targets = Matrix(20, 1);
  for (int t = 0; t < 20; ++t) w.targets(t, 0) = (t % 4 == 0) ? 1.0 : 0.0;
  const double f1 = evaluate_metric(CellKind::Ltc, p, head, SolverKind::Method::Fused, {{w}}, 1,
                                    0.1, EvalMetric::F1);
  CHECK(f1 == Catch::Approx(0.4).epsilon(1e-12));
  const double acc = evaluate_metric(CellKind::Ltc, p, head, SolverKind::Method::Fused, {{w}}, 1,
                                     0.1, EvalMetric::Accuracy);
  CHECK(acc == Catch::Approx(0.25).epsilon(1e-12));
}
