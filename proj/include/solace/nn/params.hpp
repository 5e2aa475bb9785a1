#pragma once

#include <Eigen/Dense>
#include <bit>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "solace/errors.hpp"

namespace solace::nn {

using Rng = std::mt19937_64;

/// Flat, named window onto one trainable tensor. Matrices keep Eigen's
/// column-major storage; `row_major_at` translates for serialization.
struct TensorRef {
  std::string name;
  double* data = nullptr;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  bool is_vector = false;

  std::span<double> values() const { return {data, static_cast<std::size_t>(rows * cols)}; }
  std::size_t size() const { return static_cast<std::size_t>(rows * cols); }
  double& row_major_at(std::size_t k) const {
    const auto r = static_cast<Eigen::Index>(k) / cols;
    const auto c = static_cast<Eigen::Index>(k) % cols;
    return data[c * rows + r];
  }
};

/// A parameter bundle exposes its tensors in a fixed order through
/// `visit(f)`, calling `f(name, Eigen::MatrixXd&)` or `f(name, Eigen::VectorXd&)`.
template <class P>
concept ParamBundle = std::copy_constructible<P> && requires(P& p) {
  p.visit([](std::string_view, auto&) {});
};

template <ParamBundle P>
std::vector<TensorRef> tensors(P& p) {
  std::vector<TensorRef> out;
  p.visit([&](std::string_view name, auto& t) {
    using T = std::remove_cvref_t<decltype(t)>;
    out.push_back({std::string(name), t.data(), t.rows(), t.cols(), T::ColsAtCompileTime == 1});
  });
  return out;
}

template <ParamBundle P>
std::vector<TensorRef> tensors(const P& p) {
  return tensors(const_cast<P&>(p));
}

template <ParamBundle P>
std::size_t parameter_count(const P& p) {
  std::size_t n = 0;
  for (const auto& t : tensors(p)) n += t.size();
  return n;
}

template <ParamBundle P>
P zeros_like(const P& p) {
  P z = p;
  z.visit([](std::string_view, auto& t) { t.setZero(); });
  return z;
}

/// Applies `f(a_value&, b_value)` over matching coordinates of two bundles
/// of identical structure.
template <ParamBundle P, class F>
void zip_values(P& a, const P& b, F&& f) {
  auto ta = tensors(a);
  auto tb = tensors(b);
  if (ta.size() != tb.size()) throw ConfigurationError("parameter bundles differ in tensor count");
  for (std::size_t k = 0; k < ta.size(); ++k) {
    if (ta[k].rows != tb[k].rows || ta[k].cols != tb[k].cols)
      throw ConfigurationError("shape mismatch on tensor '" + ta[k].name + "'");
    auto va = ta[k].values();
    auto vb = tb[k].values();
    for (std::size_t i = 0; i < va.size(); ++i) f(va[i], vb[i]);
  }
}

template <ParamBundle P>
void add_scaled(P& acc, const P& g, double scale) {
  zip_values(acc, g, [scale](double& a, double b) { a += scale * b; });
}

template <ParamBundle P>
double global_norm(const P& g) {
  double sq = 0.0;
  for (const auto& t : tensors(g))
    for (double v : t.values()) sq += v * v;
  return std::sqrt(sq);
}

/// Rescales `g` in place so its global L2 norm is at most `max_norm`.
/// Returns the norm before clipping. `max_norm <= 0` disables clipping.
template <ParamBundle P>
double clip_global_norm(P& g, double max_norm) {
  const double norm = global_norm(g);
  if (max_norm > 0 && norm > max_norm) {
    const double s = max_norm / norm;
    g.visit([s](std::string_view, auto& t) { t *= s; });
  }
  return norm;
}

template <ParamBundle P>
bool all_finite(const P& p, std::string* offending = nullptr) {
  for (const auto& t : tensors(p)) {
    for (double v : t.values()) {
      if (!std::isfinite(v)) {
        if (offending) *offending = t.name;
        return false;
      }
    }
  }
  return true;
}

template <ParamBundle P>
bool bitwise_equal(const P& a, const P& b) {
  auto ta = tensors(a);
  auto tb = tensors(b);
  if (ta.size() != tb.size()) return false;
  for (std::size_t k = 0; k < ta.size(); ++k) {
    if (ta[k].name != tb[k].name || ta[k].rows != tb[k].rows || ta[k].cols != tb[k].cols) return false;
    auto va = ta[k].values();
    auto vb = tb[k].values();
    for (std::size_t i = 0; i < va.size(); ++i)
      if (std::bit_cast<std::uint64_t>(va[i]) != std::bit_cast<std::uint64_t>(vb[i])) return false;
  }
  return true;
}

inline void fill_uniform(Eigen::MatrixXd& m, Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  // Row-major fill order so the draw sequence does not depend on storage order.
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = dist(rng);
}

inline void fill_uniform(Eigen::VectorXd& v, Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = dist(rng);
}

}  // namespace solace::nn
