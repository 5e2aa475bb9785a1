#pragma once

#include <cmath>
#include <cstdint>

#include "solace/nn/params.hpp"

namespace solace::nn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
};

template <ParamBundle P>
struct AdamState {
  P m;
  P v;
  std::int64_t t = 0;

  explicit AdamState(const P& like) : m(zeros_like(like)), v(zeros_like(like)) {}
};

/// One bias-corrected Adam update of `params` in place.
template <ParamBundle P>
void adam_step(P& params, const P& grads, AdamState<P>& state, double lr, const AdamConfig& cfg = {}) {
  auto tp = tensors(params);
  auto tg = tensors(grads);
  auto tm = tensors(state.m);
  auto tv = tensors(state.v);
  if (tp.size() != tg.size() || tp.size() != tm.size()) throw ConfigurationError("adam_step: bundle mismatch");
  for (std::size_t k = 0; k < tp.size(); ++k)
    if (tp[k].rows != tg[k].rows || tp[k].cols != tg[k].cols || tp[k].rows != tm[k].rows || tp[k].cols != tm[k].cols)
      throw ConfigurationError("adam_step: shape mismatch on '" + tp[k].name + "'");

  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < tp.size(); ++k) {
    auto p = tp[k].values();
    auto g = tg[k].values();
    auto m = tm[k].values();
    auto v = tv[k].values();
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

}  // namespace solace::nn
