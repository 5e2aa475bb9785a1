#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "solace/errors.hpp"
#include "solace/responder/seq2seq.hpp"

namespace solace::responder {

struct DecodeConfig {
  std::size_t beam_width = 5;
  std::size_t max_len = 20;
  double lambda = 0.5;  // MMI anti-LM weight
  std::size_t min_len = 1;
  std::string fallback_text = "我在听，可以多和我说一些吗？";

  void validate() const {
    if (beam_width < 1) throw ConfigurationError("beam_width must be at least 1");
    if (min_len < 1 || max_len < min_len) throw ConfigurationError("need max_len >= min_len >= 1");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigurationError("lambda must be finite and >= 0");
  }
};

/// `tokens` start after BOS and end with EOS once finished.
struct Hypothesis {
  Tokens tokens;
  double logprob = 0.0;
  nn::LstmState state;
  bool finished = false;
};

/// Higher log-probability first; ties go to the lexicographically smaller
/// token sequence, which also puts a prefix before its extensions.
inline bool ranks_before(double score_a, const Tokens& a, double score_b, const Tokens& b) {
  if (score_a != score_b) return score_a > score_b;
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

inline bool ranks_before(const Hypothesis& a, const Hypothesis& b) {
  return ranks_before(a.logprob, a.tokens, b.logprob, b.tokens);
}

/// Beam search over any step function `(state, prev) -> StepResult`.
/// Hypotheses still live after max_len steps are closed with EOS, whose
/// log-probability is added like any other token's.
template <class StepFn>
std::vector<Hypothesis> beam_search(StepFn&& step, const nn::LstmState& init, const TokenSpace& space,
                                    const DecodeConfig& cfg) {
  cfg.validate();
  const TokenId eos = space.eos();
  std::vector<Hypothesis> live{{{}, 0.0, init, false}};
  std::vector<Hypothesis> pool;

  for (std::size_t len = 1; len <= cfg.max_len && !live.empty() && pool.size() < cfg.beam_width; ++len) {
    std::vector<Hypothesis> candidates;
    for (const auto& h : live) {
      const auto r = step(h.state, h.tokens.empty() ? space.bos() : h.tokens.back());
      for (TokenId t = 1; static_cast<std::size_t>(t) < space.size(); ++t) {
        const double p = r.distribution(t);
        if (!(p > 0.0)) continue;
        if (t == eos && len < cfg.min_len) continue;
        Hypothesis c{h.tokens, h.logprob + std::log(p), r.state, t == eos};
        c.tokens.push_back(t);
        candidates.push_back(std::move(c));
      }
    }
    const std::size_t keep = std::min(cfg.beam_width, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end(),
                      [](const Hypothesis& a, const Hypothesis& b) { return ranks_before(a, b); });
    live.clear();
    for (std::size_t k = 0; k < keep; ++k) {
      if (candidates[k].finished)
        pool.push_back(std::move(candidates[k]));
      else
        live.push_back(std::move(candidates[k]));
    }
  }

  if (pool.size() < cfg.beam_width) {
    for (auto& h : live) {
      const auto r = step(h.state, h.tokens.back());
      h.logprob += std::log(r.distribution(eos));
      h.tokens.push_back(eos);
      h.state = r.state;
      h.finished = true;
      pool.push_back(std::move(h));
    }
  }
  std::sort(pool.begin(), pool.end(), [](const Hypothesis& a, const Hypothesis& b) { return ranks_before(a, b); });
  if (pool.size() > cfg.beam_width) pool.resize(cfg.beam_width);
  return pool;
}

/// N-best responses for an indexed source, sorted best first.
inline std::vector<Hypothesis> beam_search(const Seq2SeqModel& model, std::span<const TokenId> source,
                                           const DecodeConfig& cfg) {
  if (source.empty()) throw InvalidInput("beam_search: empty source");
  return beam_search([&](const nn::LstmState& s, TokenId prev) { return model.decode_step(s, prev); },
                     model.encode(source), model.space(), cfg);
}

/// logprob - lambda * lm_score; with lambda = 0 the LM term is skipped so
/// an infinite LM score cannot produce NaN.
inline double mmi_score(double logprob, double lm_score, double lambda) {
  return lambda == 0.0 ? logprob : logprob - lambda * lm_score;
}

/// Index of the candidate maximizing mmi_score.
inline std::size_t mmi_select(std::span<const Hypothesis> nbest, std::span<const double> lm_scores, double lambda) {
  if (nbest.empty()) throw InvalidInput("mmi_rerank: empty candidate list");
  if (lm_scores.size() != nbest.size()) throw InvalidInput("mmi_rerank: one LM score per candidate required");
  auto score = [&](std::size_t k) { return mmi_score(nbest[k].logprob, lm_scores[k], lambda); };
  std::size_t best = 0;
  for (std::size_t k = 1; k < nbest.size(); ++k)
    if (ranks_before(score(k), nbest[k].tokens, score(best), nbest[best].tokens)) best = k;
  return best;
}

inline const Hypothesis& mmi_rerank(std::span<const Hypothesis> nbest, const LanguageModel& lm, double lambda) {
  if (nbest.empty()) throw InvalidInput("mmi_rerank: empty candidate list");
  std::vector<double> lm_scores(nbest.size(), 0.0);
  if (lambda != 0.0)
    for (std::size_t k = 0; k < nbest.size(); ++k) lm_scores[k] = lm.lm_score(nbest[k].tokens);
  return nbest[mmi_select(nbest, lm_scores, lambda)];
}

/// Concatenates word tokens; special ids are dropped.
inline std::string detokenize(std::span<const TokenId> tokens, const text::EmbeddingTable& table) {
  const TokenSpace space{table.size()};
  std::string out;
  for (auto t : tokens)
    if (space.is_word(t)) out += table.word(t);
  return out;
}

struct Generation {
  std::string text;
  Tokens tokens;
  bool fallback = false;
  std::string fallback_reason;
};

/// clean -> segment -> index -> beam search -> MMI rerank -> detokenize.
/// `lm` may be null, which disables reranking.
inline Generation generate(const Seq2SeqModel& model, const LanguageModel* lm, std::string_view source,
                           const DecodeConfig& cfg) {
  cfg.validate();
  Generation g;
  const auto enc = model.pipeline().encode(source);
  if (enc.seq.indices.empty()) {
    g.text = cfg.fallback_text;
    g.fallback = true;
    g.fallback_reason = "source empty after cleaning";
    return g;
  }
  const auto nbest = beam_search(model, enc.seq.indices, cfg);
  const Hypothesis& best = lm ? mmi_rerank(nbest, *lm, cfg.lambda) : nbest.front();
  g.tokens = best.tokens;
  g.text = detokenize(best.tokens, model.pipeline().table());
  if (g.text.empty()) {
    g.text = cfg.fallback_text;
    g.fallback = true;
    g.fallback_reason = "empty decode";
  }
  return g;
}

}  // namespace solace::responder
