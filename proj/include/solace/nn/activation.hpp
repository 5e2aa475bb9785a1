#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <string_view>

#include "solace/errors.hpp"

namespace solace::nn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class ActivationKind { sigmoid, softmax };

/// Squashing used for the LSTM cell candidate and the cell output.
/// `sigmoid` is the literal reading of the gate equations; `tanh` is the
/// conventional choice.
enum class CellSquash { sigmoid, tanh };

inline std::string_view to_string(CellSquash s) { return s == CellSquash::sigmoid ? "sigmoid" : "tanh"; }

inline CellSquash cell_squash_from_string(std::string_view s) {
  if (s == "sigmoid") return CellSquash::sigmoid;
  if (s == "tanh") return CellSquash::tanh;
  throw ConfigurationError("unknown activation flag '" + std::string(s) + "'");
}

inline double sigmoid(double x) {
  // Split on sign so exp never overflows.
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline Vec sigmoid(const Vec& x) { return x.unaryExpr([](double v) { return sigmoid(v); }); }

inline Vec squash(CellSquash kind, const Vec& x) {
  return kind == CellSquash::sigmoid ? sigmoid(x) : Vec(x.array().tanh());
}

/// Derivative of the squashing function expressed through its output y.
inline Vec squash_grad_from_output(CellSquash kind, const Vec& y) {
  if (kind == CellSquash::sigmoid) return y.array() * (1.0 - y.array());
  return 1.0 - y.array().square();
}

inline Vec softmax(const Vec& x) {
  const double m = x.maxCoeff();
  Vec e = (x.array() - m).unaryExpr([](double v) { return std::exp(v); });  // Eigen clamps exp below -709
  return e / e.sum();
}

inline void require_finite(const Vec& x, const char* what) {
  if (!x.allFinite()) throw InvalidInput(std::string(what) + ": non-finite input");
}

inline Vec activation(ActivationKind kind, const Vec& x) {
  require_finite(x, "activation");
  if (kind == ActivationKind::sigmoid) return sigmoid(x);
  if (x.size() == 0) throw InvalidInput("softmax of an empty vector");
  return softmax(x);
}

}  // namespace solace::nn
