#pragma once

#include <cmath>
#include <string>

#include "ltc/errors.hpp"
#include "ltc/matrix.hpp"

namespace ltc {

enum class LossKind { Mse, CrossEntropy, WeightedCrossEntropy };

inline std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::Mse: return "mse";
    case LossKind::CrossEntropy: return "cross-entropy";
    case LossKind::WeightedCrossEntropy: return "weighted-cross-entropy";
  }
  return "?";
}

inline LossKind loss_kind_from_string(const std::string& name) {
  if (name == "mse") return LossKind::Mse;
  if (name == "cross-entropy" || name == "ce") return LossKind::CrossEntropy;
  if (name == "weighted-cross-entropy" || name == "wce") return LossKind::WeightedCrossEntropy;
  throw ParameterError("unknown loss: " + name);
}

struct LossSpec {
  LossKind kind = LossKind::Mse;
  Vec class_weights;  // one positive weight per class, weighted cross-entropy only
};

// Loss of one window, summed over time steps. predictions is T x C. For mse
// the targets are T x C values; for cross-entropy they are T x 1 integer
// class labels and predictions are logits (the log-softmax is evaluated in
// stabilized form). If dpred is non-null it receives d loss / d predictions.
inline double loss_eval_grad(const LossSpec& spec, const Matrix& predictions,
                             const Matrix& targets, Matrix* dpred) {
  const std::size_t T = predictions.rows, C = predictions.cols;
  if (targets.rows != T) throw ParameterError("loss: predictions/targets length mismatch");
  if (dpred) *dpred = Matrix(T, C);

  if (spec.kind == LossKind::Mse) {
    if (targets.cols != C) throw ParameterError("loss: mse needs targets with prediction shape");
    double total = 0.0;
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t c = 0; c < C; ++c) {
        const double d = predictions(t, c) - targets(t, c);
        total += d * d / static_cast<double>(C);
        if (dpred) (*dpred)(t, c) = 2.0 * d / static_cast<double>(C);
      }
    return total;
  }

  // cross-entropy
  if (targets.cols != 1) throw ParameterError("loss: cross-entropy needs one label column");
  const bool weighted = spec.kind == LossKind::WeightedCrossEntropy;
  if (weighted) {
    if (spec.class_weights.size() != C)
      throw ParameterError("loss: need one class weight per class");
    for (double w : spec.class_weights)
      if (!(w > 0.0)) throw ParameterError("loss: class weights must be positive");
  }

  double total = 0.0;
  Vec p(C);
  for (std::size_t t = 0; t < T; ++t) {
    const double raw = targets(t, 0);
    const auto label = static_cast<long long>(std::llround(raw));
    if (std::abs(raw - static_cast<double>(label)) > 1e-9 || label < 0 ||
        label >= static_cast<long long>(C))
      throw ParameterError("loss: label " + std::to_string(raw) + " out of range at step " +
                           std::to_string(t));
    const double w = weighted ? spec.class_weights[static_cast<std::size_t>(label)] : 1.0;

    double maxv = predictions(t, 0);
    for (std::size_t c = 1; c < C; ++c) maxv = std::max(maxv, predictions(t, c));
    double sum = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      p[c] = std::exp(predictions(t, c) - maxv);
      sum += p[c];
    }
    const double lse = maxv + std::log(sum);
    total += w * (lse - predictions(t, static_cast<std::size_t>(label)));
    if (dpred)
      for (std::size_t c = 0; c < C; ++c)
        (*dpred)(t, c) =
            w * (p[c] / sum - (c == static_cast<std::size_t>(label) ? 1.0 : 0.0));
  }
  return total;
}

inline double loss_eval(const LossSpec& spec, const Matrix& predictions, const Matrix& targets) {
  return loss_eval_grad(spec, predictions, targets, nullptr);
}

}  // namespace ltc
