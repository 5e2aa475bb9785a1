#pragma once

#include <algorithm>
#include <cmath>
#include <span>

#include "solace/errors.hpp"

namespace solace::nn {

inline constexpr double kBceEpsilon = 1e-7;

inline double clamp_probability(double p) { return std::clamp(p, kBceEpsilon, 1.0 - kBceEpsilon); }

/// Binary cross entropy for one prediction, on the clamped probability.
inline double bce_term(double p, double y) {
  const double q = clamp_probability(p);
  return -(y * std::log(q) + (1.0 - y) * std::log(1.0 - q));
}

/// d(bce_term)/d(logit) for p = sigmoid(logit). Zero where the clamp is active.
inline double bce_logit_grad(double p, double y) {
  if (p <= kBceEpsilon || p >= 1.0 - kBceEpsilon) return 0.0;
  return p - y;
}

/// Mean binary cross entropy.
inline double bce_loss(std::span<const double> preds, std::span<const int> labels) {
  if (preds.size() != labels.size()) throw InvalidInput("bce_loss: predictions and labels differ in length");
  if (preds.empty()) throw InvalidInput("bce_loss: empty input");
  double sum = 0.0;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    if (labels[k] != 0 && labels[k] != 1) throw InvalidInput("bce_loss: labels must be 0 or 1");
    sum += bce_term(preds[k], labels[k]);
  }
  return sum / static_cast<double>(preds.size());
}

}  // namespace solace::nn
