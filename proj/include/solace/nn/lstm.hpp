#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "solace/errors.hpp"
#include "solace/nn/activation.hpp"
#include "solace/nn/params.hpp"

namespace solace::nn {

/// Peephole LSTM cell. Input weights are input_dim x hidden and recurrent
/// weights hidden x hidden, applied as row-vector products (x W); the
/// peepholes w_c* act elementwise on the cell state.
struct LstmCellParams {
  Mat w_xi, w_hi, w_xf, w_hf, w_xo, w_ho, w_xc, w_hc;
  Vec w_ci, w_cf, w_co;
  Vec b_i, b_f, b_o, b_c;

  Eigen::Index input_dim() const { return w_xi.rows(); }
  Eigen::Index hidden_dim() const { return w_xi.cols(); }

  static LstmCellParams zeros(Eigen::Index input_dim, Eigen::Index hidden_dim) {
    LstmCellParams p;
    for (Mat* m : {&p.w_xi, &p.w_xf, &p.w_xo, &p.w_xc}) *m = Mat::Zero(input_dim, hidden_dim);
    for (Mat* m : {&p.w_hi, &p.w_hf, &p.w_ho, &p.w_hc}) *m = Mat::Zero(hidden_dim, hidden_dim);
    for (Vec* v : {&p.w_ci, &p.w_cf, &p.w_co, &p.b_i, &p.b_f, &p.b_o, &p.b_c}) *v = Vec::Zero(hidden_dim);
    return p;
  }

  /// Weights uniform in [-scale, scale]; peepholes and biases zero.
  static LstmCellParams uniform(Eigen::Index input_dim, Eigen::Index hidden_dim, Rng& rng, double scale) {
    LstmCellParams p = zeros(input_dim, hidden_dim);
    for (Mat* m : {&p.w_xi, &p.w_hi, &p.w_xf, &p.w_hf, &p.w_xo, &p.w_ho, &p.w_xc, &p.w_hc})
      fill_uniform(*m, rng, -scale, scale);
    return p;
  }

  template <class F>
  void visit(F&& f) {
    f("w_xi", w_xi); f("w_hi", w_hi); f("w_xf", w_xf); f("w_hf", w_hf);
    f("w_xo", w_xo); f("w_ho", w_ho); f("w_xc", w_xc); f("w_hc", w_hc);
    f("w_ci", w_ci); f("w_cf", w_cf); f("w_co", w_co);
    f("b_i", b_i); f("b_f", b_f); f("b_o", b_o); f("b_c", b_c);
  }

  void validate() const {
    const auto in = input_dim();
    const auto h = hidden_dim();
    auto bad = [](const char* n) { throw ConfigurationError(std::string("lstm tensor '") + n + "' has inconsistent shape"); };
    for (auto [n, m] : {std::pair{"w_xi", &w_xi}, {"w_xf", &w_xf}, {"w_xo", &w_xo}, {"w_xc", &w_xc}})
      if (m->rows() != in || m->cols() != h) bad(n);
    for (auto [n, m] : {std::pair{"w_hi", &w_hi}, {"w_hf", &w_hf}, {"w_ho", &w_ho}, {"w_hc", &w_hc}})
      if (m->rows() != h || m->cols() != h) bad(n);
    for (auto [n, v] : {std::pair{"w_ci", &w_ci}, {"w_cf", &w_cf}, {"w_co", &w_co}, {"b_i", &b_i},
                        {"b_f", &b_f}, {"b_o", &b_o}, {"b_c", &b_c}})
      if (v->size() != h) bad(n);
  }
};

/// Nests a cell's tensors under `prefix.` inside a larger bundle.
template <class F>
void visit_prefixed(std::string_view prefix, LstmCellParams& p, F&& f) {
  p.visit([&](std::string_view name, auto& t) {
    std::string full(prefix);
    full += '.';
    full += name;
    f(std::string_view(full), t);
  });
}

struct LstmState {
  Vec h;
  Vec c;

  static LstmState zeros(Eigen::Index hidden_dim) { return {Vec::Zero(hidden_dim), Vec::Zero(hidden_dim)}; }
};

/// Everything the backward pass needs from one forward step.
struct CellCache {
  Vec x, h_prev, c_prev;
  Vec i, f, o, g, c, s;  // gates, candidate, new cell, squashed cell
};

inline LstmState lstm_cell_step(const Vec& x, const LstmState& prev, const LstmCellParams& p,
                                CellSquash squash_kind = CellSquash::sigmoid, CellCache* cache = nullptr) {
  if (x.size() != p.input_dim()) throw ConfigurationError("lstm input width does not match w_x* rows");
  if (prev.h.size() != p.hidden_dim() || prev.c.size() != p.hidden_dim())
    throw ConfigurationError("lstm state width does not match hidden size");

  const Vec i = sigmoid(Vec(p.w_xi.transpose() * x + p.w_hi.transpose() * prev.h +
                            p.w_ci.cwiseProduct(prev.c) + p.b_i));
  const Vec f = sigmoid(Vec(p.w_xf.transpose() * x + p.w_hf.transpose() * prev.h +
                            p.w_cf.cwiseProduct(prev.c) + p.b_f));
  const Vec g = squash(squash_kind, Vec(p.w_xc.transpose() * x + p.w_hc.transpose() * prev.h + p.b_c));
  Vec c = f.cwiseProduct(prev.c) + i.cwiseProduct(g);
  // The output gate peeks at the new cell state.
  const Vec o = sigmoid(Vec(p.w_xo.transpose() * x + p.w_ho.transpose() * prev.h + p.w_co.cwiseProduct(c) + p.b_o));
  const Vec s = squash(squash_kind, c);
  Vec h = o.cwiseProduct(s);

  if (cache) *cache = CellCache{x, prev.h, prev.c, i, f, o, g, c, s};
  return {std::move(h), std::move(c)};
}

/// Backpropagates one step. `dh` and `dc` are the total gradients arriving
/// at this step's h and c; parameter gradients accumulate into `grad`.
inline void lstm_cell_backward(const CellCache& k, const LstmCellParams& p, CellSquash squash_kind, const Vec& dh,
                               const Vec& dc_in, LstmCellParams& grad, Vec* dx, Vec& dh_prev, Vec& dc_prev) {
  const Vec one_minus_o = 1.0 - k.o.array();
  const Vec da_o = dh.cwiseProduct(k.s).cwiseProduct(k.o).cwiseProduct(one_minus_o);
  const Vec dc = dc_in + dh.cwiseProduct(k.o).cwiseProduct(squash_grad_from_output(squash_kind, k.s)) +
                 da_o.cwiseProduct(p.w_co);
  const Vec da_i = dc.cwiseProduct(k.g).cwiseProduct(k.i).cwiseProduct(Vec(1.0 - k.i.array()));
  const Vec da_f = dc.cwiseProduct(k.c_prev).cwiseProduct(k.f).cwiseProduct(Vec(1.0 - k.f.array()));
  const Vec da_c = dc.cwiseProduct(k.i).cwiseProduct(squash_grad_from_output(squash_kind, k.g));

  dc_prev = dc.cwiseProduct(k.f) + da_i.cwiseProduct(p.w_ci) + da_f.cwiseProduct(p.w_cf);
  dh_prev = p.w_hi * da_i + p.w_hf * da_f + p.w_ho * da_o + p.w_hc * da_c;
  if (dx) *dx = p.w_xi * da_i + p.w_xf * da_f + p.w_xo * da_o + p.w_xc * da_c;

  grad.w_xi.noalias() += k.x * da_i.transpose();
  grad.w_xf.noalias() += k.x * da_f.transpose();
  grad.w_xo.noalias() += k.x * da_o.transpose();
  grad.w_xc.noalias() += k.x * da_c.transpose();
  grad.w_hi.noalias() += k.h_prev * da_i.transpose();
  grad.w_hf.noalias() += k.h_prev * da_f.transpose();
  grad.w_ho.noalias() += k.h_prev * da_o.transpose();
  grad.w_hc.noalias() += k.h_prev * da_c.transpose();
  grad.w_ci += da_i.cwiseProduct(k.c_prev);
  grad.w_cf += da_f.cwiseProduct(k.c_prev);
  grad.w_co += da_o.cwiseProduct(k.c);
  grad.b_i += da_i;
  grad.b_f += da_f;
  grad.b_o += da_o;
  grad.b_c += da_c;
}

struct LstmRun {
  std::vector<Vec> hidden;  // h_t for every step
  LstmState final;
  std::vector<CellCache> caches;  // empty unless requested
};

inline LstmRun lstm_forward(const LstmCellParams& p, std::span<const Vec> xs, const LstmState& init,
                            CellSquash squash_kind = CellSquash::sigmoid, bool keep_cache = false) {
  LstmRun run;
  run.hidden.reserve(xs.size());
  if (keep_cache) run.caches.resize(xs.size());
  LstmState state = init;
  for (std::size_t t = 0; t < xs.size(); ++t) {
    state = lstm_cell_step(xs[t], state, p, squash_kind, keep_cache ? &run.caches[t] : nullptr);
    run.hidden.push_back(state.h);
  }
  run.final = std::move(state);
  return run;
}

struct LstmGradients {
  std::vector<Vec> dx;  // per input step, empty unless requested
  LstmState dinit;      // gradient with respect to the initial (h, c)
};

/// BPTT over a cached run. `dh_seq` is either empty or one gradient per
/// step; `dh_final` / `dc_final` (may be empty vectors) land on the last step.
inline LstmGradients lstm_backward(const LstmCellParams& p, const LstmRun& run, CellSquash squash_kind,
                                   std::span<const Vec> dh_seq, const Vec& dh_final, const Vec& dc_final,
                                   LstmCellParams& grad, bool want_dx) {
  const std::size_t n = run.caches.size();
  if (n == 0) throw InvalidInput("lstm_backward needs a cached, nonempty run");
  if (!dh_seq.empty() && dh_seq.size() != n) throw ConfigurationError("dh sequence length mismatch");
  const auto hd = p.hidden_dim();

  LstmGradients out;
  if (want_dx) out.dx.resize(n);
  Vec dh = dh_final.size() ? dh_final : Vec::Zero(hd);
  Vec dc = dc_final.size() ? dc_final : Vec::Zero(hd);
  Vec dh_prev(hd), dc_prev(hd);
  for (std::size_t t = n; t-- > 0;) {
    if (!dh_seq.empty()) dh += dh_seq[t];
    lstm_cell_backward(run.caches[t], p, squash_kind, dh, dc, grad, want_dx ? &out.dx[t] : nullptr, dh_prev, dc_prev);
    dh = dh_prev;
    dc = dc_prev;
  }
  out.dinit = {std::move(dh), std::move(dc)};
  return out;
}

/// Forward and backward passes over the same sequence, hidden states
/// concatenated per position as [forward ; backward].
inline std::vector<Vec> bilstm_forward(std::span<const Vec> seq, const LstmCellParams& fwd, const LstmCellParams& bwd,
                                       CellSquash squash_kind = CellSquash::sigmoid) {
  if (seq.empty()) throw InvalidInput("bilstm_forward: empty sequence");
  const std::vector<Vec> reversed(seq.rbegin(), seq.rend());
  const LstmRun f = lstm_forward(fwd, seq, LstmState::zeros(fwd.hidden_dim()), squash_kind);
  const LstmRun b = lstm_forward(bwd, reversed, LstmState::zeros(bwd.hidden_dim()), squash_kind);
  const std::size_t n = seq.size();
  std::vector<Vec> out(n);
  for (std::size_t t = 0; t < n; ++t) {
    out[t].resize(fwd.hidden_dim() + bwd.hidden_dim());
    out[t] << f.hidden[t], b.hidden[n - 1 - t];
  }
  return out;
}

}  // namespace solace::nn
