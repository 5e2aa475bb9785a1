#pragma once

// Tiny models shared by the unit tests and the acceptance suite, plus the
// exhaustive decoding oracle.

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "solace/classifier/classifier.hpp"
#include "solace/corpus/conv.hpp"
#include "solace/responder/seq2seq.hpp"
#include "solace/toy_data.hpp"

namespace fixtures {

using namespace solace;
using responder::Seq2SeqConfig;
using responder::Seq2SeqModel;
using responder::Seq2SeqParams;
using responder::TokenId;
using responder::Tokens;

struct TinyClassifier {
  std::shared_ptr<text::EmbeddingTable> table;
  classifier::ClassifierParams params;
  std::vector<classifier::ClassifierExample> batch;
};

inline TinyClassifier make_tiny_classifier(std::uint64_t seed, bool tune_embeddings) {
  nn::Rng rng(seed);
  std::uniform_real_distribution<double> d(-1, 1);
  auto table = std::make_shared<text::EmbeddingTable>(2);
  for (const char* w : {"甲", "乙", "丙"}) table->add(w, Eigen::Vector2d(d(rng), d(rng)));
  TinyClassifier t{table, classifier::ClassifierParams::init(2, 2, 2, rng, 0.05), {}};
  oracle::randomize_all(t.params, rng, 0.7);
  if (tune_embeddings) {
    t.params.embedding = table->matrix();
    t.params.embedding.row(2).setZero();  // row 2 is never used below
    for (Eigen::Index c = 0; c < 2; ++c) t.params.embedding(1, c) = d(rng);
  }
  t.batch = {{{0, 1, 3}, 1}, {{1, 1, 3, 3}, 0}, {{0, 0, 3}, 1}};
  return t;
}

inline double batch_loss(const classifier::ClassifierNet& net, const classifier::ClassifierParams& p,
                  const std::vector<classifier::ClassifierExample>& batch) {
  std::vector<const classifier::ClassifierExample*> ptrs;
  for (const auto& e : batch) ptrs.push_back(&e);
  return net.loss(p, ptrs);
}

inline classifier::ClassifierParams batch_grad(const classifier::ClassifierNet& net, const classifier::ClassifierParams& p,
                                        const std::vector<classifier::ClassifierExample>& batch) {
  std::vector<const classifier::ClassifierExample*> ptrs;
  for (const auto& e : batch) ptrs.push_back(&e);
  auto g = nn::zeros_like(p);
  net.loss_and_gradient(p, ptrs, g);
  return g;
}


/// Tiny vocabulary: `words` ideographs, embedding dim 3, every tensor random.
struct Tiny {
  std::shared_ptr<text::EmbeddingTable> table;
  Seq2SeqConfig cfg;
  Seq2SeqParams params;
};

inline Tiny make_tiny(std::uint64_t seed, std::size_t words = 2, double scale = 0.8, bool tune = false, int hidden = 2) {
  Tiny t;
  t.table = toy::random_table(toy::ideographs(words), 3, seed);
  t.cfg.hidden_units = hidden;
  t.cfg.train_embeddings = tune;
  nn::Rng rng(seed);
  t.params = Seq2SeqModel::init_params(t.cfg, *t.table, rng);
  oracle::randomize_all(t.params, rng, scale);
  return t;
}

/// Exhaustive best sequence: every path of length <= max_len ending in EOS,
/// plus max_len-long paths closed by a scored EOS.
inline std::pair<Tokens, double> exhaustive_best(const Seq2SeqModel& m, const Tokens& src, std::size_t max_len) {
  const auto& space = m.space();
  Tokens best;
  double best_lp = -std::numeric_limits<double>::infinity();
  auto consider = [&](const Tokens& toks, double lp) {
    if (lp > best_lp || (lp == best_lp && std::lexicographical_compare(toks.begin(), toks.end(), best.begin(), best.end()))) {
      best = toks;
      best_lp = lp;
    }
  };
  std::function<void(nn::LstmState, Tokens, double)> rec = [&](nn::LstmState s, Tokens toks, double lp) {
    const auto r = m.decode_step(s, toks.empty() ? space.bos() : toks.back());
    if (toks.size() == max_len) {
      Tokens closed = toks;
      closed.push_back(space.eos());
      consider(closed, lp + std::log(r.distribution(space.eos())));
      return;
    }
    for (TokenId t = 1; static_cast<std::size_t>(t) < space.size(); ++t) {
      Tokens next = toks;
      next.push_back(t);
      const double nlp = lp + std::log(r.distribution(t));
      if (t == space.eos())
        consider(next, nlp);
      else
        rec(r.state, next, nlp);
    }
  };
  rec(m.encode(src), {}, 0.0);
  return {best, best_lp};
}

double recompute_logprob(const Seq2SeqModel& m, const Tokens& src, const Tokens& toks) {
  auto s = m.encode(src);
  TokenId prev = m.space().bos();
  double lp = 0.0;
  for (auto t : toks) {
    const auto r = m.decode_step(s, prev);
    lp += std::log(r.distribution(t));
    s = r.state;
    prev = t;
  }
  return lp;
}

inline Tokens ids_of(const text::EmbeddingTable& table, const std::vector<std::string>& words) {
  Tokens out;
  for (const auto& w : words) out.push_back(*table.find(w));
  return out;
}

/// Scores 0.1 per '#' in the utterance, capped at 1.
struct SentinelScorer {
  double operator()(std::string_view u) const {
    return std::min(1.0, 0.1 * static_cast<double>(std::count(u.begin(), u.end(), '#')));
  }
};

inline std::vector<corpus::Conversation> random_corpus(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> n_utt(1, 4), n_hash(0, 10), n_chars(1, 6);
  std::vector<corpus::Conversation> out(n);
  for (auto& c : out) {
    for (int k = n_utt(rng); k > 0; --k) {
      std::string u;
      for (int j = n_chars(rng); j > 0; --j) u += "你";
      u += std::string(static_cast<std::size_t>(n_hash(rng)), '#');
      c.utterances.push_back(u);
    }
  }
  return out;
}

}  // namespace fixtures
