#pragma once

#include <cmath>
#include <string>

#include "ltc/errors.hpp"

namespace ltc {

enum class Activation { Tanh, Sigmoid, Relu, HardTanh };

inline double activate(Activation kind, double u) {
  switch (kind) {
    case Activation::Tanh:
      return std::tanh(u);
    case Activation::Sigmoid: {
      // Evaluate from the non-overflowing side.
      if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
      const double e = std::exp(u);
      return e / (1.0 + e);
    }
    case Activation::Relu:
      return u > 0.0 ? u : 0.0;
    case Activation::HardTanh:
      return u > 1.0 ? 1.0 : (u < -1.0 ? -1.0 : u);
  }
  return 0.0;
}

// d activate / d u. Kinks of relu/hard-tanh take the inner-region value 0/1
// on the closed saturation side.
inline double activate_grad(Activation kind, double u) {
  switch (kind) {
    case Activation::Tanh: {
      const double t = std::tanh(u);
      return 1.0 - t * t;
    }
    case Activation::Sigmoid: {
      const double s = activate(Activation::Sigmoid, u);
      return s * (1.0 - s);
    }
    case Activation::Relu:
      return u > 0.0 ? 1.0 : 0.0;
    case Activation::HardTanh:
      return (u > -1.0 && u < 1.0) ? 1.0 : 0.0;
  }
  return 0.0;
}

inline std::string to_string(Activation kind) {
  switch (kind) {
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Relu: return "relu";
    case Activation::HardTanh: return "hard-tanh";
  }
  return "?";
}

inline Activation activation_from_string(const std::string& name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "relu") return Activation::Relu;
  if (name == "hard-tanh" || name == "hardtanh") return Activation::HardTanh;
  throw ParameterError("unknown activation: " + name);
}

}  // namespace ltc
