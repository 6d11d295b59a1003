#pragma once

#include <cmath>
#include <string>

#include "cellnet/error.hpp"

namespace cellnet {

enum class Activation { Identity, ReLU, ELU };

inline double activate(Activation a, double v) {
  switch (a) {
    case Activation::Identity: return v;
    case Activation::ReLU: return v > 0 ? v : 0.0;
    case Activation::ELU: return v > 0 ? v : std::expm1(v);
  }
  return v;
}

/// Derivative expressed through the input value.
inline double activate_grad(Activation a, double v) {
  switch (a) {
    case Activation::Identity: return 1.0;
    case Activation::ReLU: return v > 0 ? 1.0 : 0.0;
    case Activation::ELU: return v > 0 ? 1.0 : std::exp(v);
  }
  return 1.0;
}

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::ReLU: return "relu";
    case Activation::ELU: return "elu";
  }
  return "?";
}

inline Activation parse_activation(const std::string& name) {
  if (name == "identity") return Activation::Identity;
  if (name == "relu") return Activation::ReLU;
  if (name == "elu") return Activation::ELU;
  throw Error(ErrorCode::BadSpec, "unknown nonlinearity '" + name + "'");
}

}  // namespace cellnet
