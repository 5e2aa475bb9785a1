#pragma once

// Independent reference implementations used only by tests. Nothing here
// calls into the vectorized library paths it is compared against.

#include <cmath>
#include <functional>
#include <vector>

#include "solace/nn/lstm.hpp"
#include "solace/nn/params.hpp"

namespace oracle {

inline double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct ScalarState {
  std::vector<double> h, c;
};

/// Gate equations written out coordinate by coordinate.
inline ScalarState lstm_step(const std::vector<double>& x, const ScalarState& prev, const solace::nn::LstmCellParams& p,
                             bool tanh_squash = false) {
  const int in = static_cast<int>(p.w_xi.rows());
  const int hd = static_cast<int>(p.w_xi.cols());
  auto sq = [&](double v) { return tanh_squash ? std::tanh(v) : sig(v); };
  ScalarState out{std::vector<double>(hd), std::vector<double>(hd)};
  for (int j = 0; j < hd; ++j) {
    double ai = p.b_i(j), af = p.b_f(j), ac = p.b_c(j), ao = p.b_o(j);
    for (int k = 0; k < in; ++k) {
      ai += x[k] * p.w_xi(k, j);
      af += x[k] * p.w_xf(k, j);
      ac += x[k] * p.w_xc(k, j);
      ao += x[k] * p.w_xo(k, j);
    }
    for (int k = 0; k < hd; ++k) {
      ai += prev.h[k] * p.w_hi(k, j);
      af += prev.h[k] * p.w_hf(k, j);
      ac += prev.h[k] * p.w_hc(k, j);
      ao += prev.h[k] * p.w_ho(k, j);
    }
    ai += p.w_ci(j) * prev.c[j];
    af += p.w_cf(j) * prev.c[j];
    const double i = sig(ai);
    const double f = sig(af);
    const double c = f * prev.c[j] + i * sq(ac);
    ao += p.w_co(j) * c;
    const double o = sig(ao);
    out.c[j] = c;
    out.h[j] = o * sq(c);
  }
  return out;
}

/// Central finite differences of `loss` with respect to every coordinate of
/// the bundle, in `tensors()` order.
template <solace::nn::ParamBundle P>
std::vector<double> finite_difference(P params, const std::function<double(const P&)>& loss, double step = 1e-4) {
  std::vector<double> out;
  for (auto& t : solace::nn::tensors(params)) {
    for (double& v : t.values()) {
      const double orig = v;
      v = orig + step;
      const double up = loss(params);
      v = orig - step;
      const double down = loss(params);
      v = orig;
      out.push_back((up - down) / (2 * step));
    }
  }
  return out;
}

template <solace::nn::ParamBundle P>
std::vector<double> flatten(const P& p) {
  std::vector<double> out;
  for (const auto& t : solace::nn::tensors(p))
    for (double v : t.values()) out.push_back(v);
  return out;
}

/// Worst relative error over coordinates where either side exceeds `floor`.
inline double max_relative_error(const std::vector<double>& a, const std::vector<double>& b, double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double scale = std::max(std::abs(a[k]), std::abs(b[k]));
    if (scale <= floor) continue;
    worst = std::max(worst, std::abs(a[k] - b[k]) / scale);
  }
  return worst;
}

/// Fills every coordinate (weights, peepholes and biases) uniformly.
template <solace::nn::ParamBundle P>
void randomize_all(P& p, solace::nn::Rng& rng, double scale) {
  std::uniform_real_distribution<double> d(-scale, scale);
  for (auto& t : solace::nn::tensors(p))
    for (double& v : t.values()) v = d(rng);
}

}  // namespace oracle
