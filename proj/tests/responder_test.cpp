#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <functional>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "solace/responder/beam.hpp"
#include "solace/responder/training.hpp"
#include "solace/toy_data.hpp"

using namespace solace;
using namespace solace::responder;
using namespace fixtures;

namespace {

std::vector<double> oracle_softmax_masked(const TargetParams& p, const std::vector<double>& h) {
  const auto v = static_cast<std::size_t>(p.projection.cols());
  std::vector<double> z(v), out(v, 0.0);
  for (std::size_t j = 0; j < v; ++j) {
    z[j] = p.projection_b(static_cast<Eigen::Index>(j));
    for (std::size_t k = 0; k < h.size(); ++k) z[j] += h[k] * p.projection(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j));
  }
  double total = 0.0;
  for (std::size_t j = 1; j < v; ++j) total += std::exp(z[j]);
  for (std::size_t j = 1; j < v; ++j) out[j] = std::exp(z[j]) / total;
  return out;
}

std::vector<double> embedding_row(const Tiny& t, TokenId id) {
  const TokenSpace space{t.table->size()};
  std::vector<double> x(static_cast<std::size_t>(t.table->dim()));
  for (std::size_t k = 0; k < x.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    if (id == space.eos()) x[k] = t.params.target.specials(0, kk);
    else if (id == space.bos()) x[k] = t.params.target.specials(1, kk);
    else x[k] = t.table->matrix()(id, kk);
  }
  return x;
}

std::string text_of(const std::vector<std::string>& words) {
  std::string s;
  for (const auto& w : words) s += w;
  return s;
}

}  // namespace

TEST(DecodeStep, ZeroProjectionIsUniformOverNonPad) {
  auto t = make_tiny(1, 4);
  t.params.target.projection.setZero();
  t.params.target.projection_b.setZero();
  const Seq2SeqModel m(t.cfg, t.params, t.table);
  const auto r = m.decode_step(m.encode(Tokens{1, 2}), m.space().bos());
  EXPECT_EQ(r.distribution(kPad), 0.0);
  for (TokenId k = 1; k < static_cast<TokenId>(m.space().size()); ++k) EXPECT_NEAR(r.distribution(k), 1.0 / 6.0, 1e-15);
}

TEST(DecodeStep, DistributionSumsToOneWithNoPadMass) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto t = make_tiny(seed, 5, 3.0);
    const Seq2SeqModel m(t.cfg, t.params, t.table);
    auto s = m.encode(Tokens{3, 0, 5});
    TokenId prev = m.space().bos();
    for (int k = 0; k < 4; ++k) {
      const auto r = m.decode_step(s, prev);
      EXPECT_NEAR(r.distribution.sum(), 1.0, 1e-9);
      EXPECT_EQ(r.distribution(kPad), 0.0);
      EXPECT_GE(r.distribution.minCoeff(), 0.0);
      s = r.state;
      prev = static_cast<TokenId>(1 + k);
    }
  }
}

TEST(DecodeStep, MatchesHandComposedOracle) {
  const auto t = make_tiny(7, 2);
  const Seq2SeqModel m(t.cfg, t.params, t.table);
  const Tokens src{2, 1};
  const oracle::ScalarState z{{0, 0}, {0, 0}};
  const auto e0 = oracle::lstm_step(embedding_row(t, 2), z, t.params.encoder);
  const auto e1 = oracle::lstm_step(embedding_row(t, 1), e0, t.params.encoder);
  const auto d0 = oracle::lstm_step(embedding_row(t, m.space().bos()), e1, t.params.target.decoder);
  const auto want = oracle_softmax_masked(t.params.target, d0.h);
  const auto got = m.decode_step(m.encode(src), m.space().bos());
  for (std::size_t j = 0; j < want.size(); ++j) EXPECT_NEAR(got.distribution(static_cast<Eigen::Index>(j)), want[j], 1e-10);
  EXPECT_NEAR(got.state.h(0), d0.h[0], 1e-12);
}

TEST(DecodeStep, UnknownTokenRejected) {
  const auto t = make_tiny(2, 2);
  const Seq2SeqModel m(t.cfg, t.params, t.table);
  EXPECT_THROW(m.decode_step(nn::LstmState::zeros(2), 99), InvalidInput);
  EXPECT_THROW(m.decode_step(nn::LstmState::zeros(2), -1), InvalidInput);
}

TEST(Seq2SeqGradients, MatchFiniteDifferences) {
  for (bool tune : {false, true}) {
    for (auto squash : {nn::CellSquash::sigmoid, nn::CellSquash::tanh}) {
      auto t = make_tiny(11 + tune, 3, 0.8, tune);
      const Seq2SeqNet net(t.table, squash);
      const std::vector<Seq2SeqExample> data{{{1, 3, 0}, {2, 2}}, {{2}, {3, 1, 1}}};
      std::vector<const Seq2SeqExample*> batch{&data[0], &data[1]};
      auto grad = nn::zeros_like(t.params);
      net.loss_and_gradient(t.params, batch, grad);
      const auto numeric = oracle::finite_difference<Seq2SeqParams>(
          t.params, [&](const Seq2SeqParams& p) { return net.loss(p, batch); });
      EXPECT_LT(oracle::max_relative_error(oracle::flatten(grad), numeric), 1e-4) << "tune=" << tune;
      if (tune) {
        EXPECT_EQ(grad.target.embedding.row(0).cwiseAbs().maxCoeff(), 0.0);
      }
    }
  }
}

TEST(LanguageModelGradients, MatchFiniteDifferences) {
  const auto t = make_tiny(13, 3);
  const LanguageModelNet net(t.table, nn::CellSquash::sigmoid);
  const std::vector<LmExample> data{{{1, 2, 3}}, {{3}}};
  std::vector<const LmExample*> batch{&data[0], &data[1]};
  auto p = t.params.target;
  auto grad = nn::zeros_like(p);
  net.loss_and_gradient(p, batch, grad);
  const auto numeric =
      oracle::finite_difference<TargetParams>(p, [&](const TargetParams& q) { return net.loss(q, batch); });
  EXPECT_LT(oracle::max_relative_error(oracle::flatten(grad), numeric), 1e-4);
}

TEST(Seq2SeqTraining, EmptyCorpusRejected) {
  const auto t = make_tiny(3);
  EXPECT_THROW(train_seq2seq(std::vector<Seq2SeqExample>{}, {}, t.cfg, t.table), InvalidInput);
  EXPECT_THROW(train_seq2seq(std::vector<QaPair>{{"abc", "def"}}, t.cfg, t.table), InvalidInput);
}

TEST(Seq2SeqTraining, TeacherForcingUsesGoldInputs) {
  // The loss of a gold target is independent of what the model would sample:
  // it equals the sum of per-step NLLs with gold tokens fed back.
  const auto t = make_tiny(17, 3, 2.0);
  const Seq2SeqModel m(t.cfg, t.params, t.table);
  const Seq2SeqExample ex{{1, 2}, {3, 1}};
  const std::vector<const Seq2SeqExample*> batch{&ex};
  Tokens gold = ex.target;
  gold.push_back(m.space().eos());
  EXPECT_NEAR(m.net().loss(t.params, batch), -recompute_logprob(m, ex.source, gold) / 3.0, 1e-12);
}

TEST(BeamSearch, WidthOneIsGreedyChain) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto t = make_tiny(seed, 4, 2.0);
    const Seq2SeqModel m(t.cfg, t.params, t.table);
    const Tokens src{1, 4};
    DecodeConfig cfg;
    cfg.beam_width = 1;
    cfg.max_len = 6;
    const auto nbest = beam_search(m, src, cfg);
    ASSERT_EQ(nbest.size(), 1u);

    Tokens greedy;
    auto s = m.encode(src);
    TokenId prev = m.space().bos();
    while (true) {
      const auto r = m.decode_step(s, prev);
      Eigen::Index arg = 0;
      r.distribution.maxCoeff(&arg);
      if (greedy.size() == cfg.max_len) {
        greedy.push_back(m.space().eos());
        break;
      }
      greedy.push_back(static_cast<TokenId>(arg));
      if (arg == m.space().eos()) break;
      s = r.state;
      prev = static_cast<TokenId>(arg);
    }
    EXPECT_EQ(nbest[0].tokens, greedy) << "seed " << seed;
  }
}

TEST(BeamSearch, WideBeamMatchesExhaustiveEnumeration) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto t = make_tiny(1000 + seed, 2, 2.5);
    const Seq2SeqModel m(t.cfg, t.params, t.table);
    ASSERT_EQ(m.space().size() - 1, 4u);
    DecodeConfig cfg;
    cfg.beam_width = 64;
    cfg.max_len = 3;
    const Tokens src{1, 2, 1};
    const auto nbest = beam_search(m, src, cfg);
    const auto [best, lp] = exhaustive_best(m, src, cfg.max_len);
    ASSERT_FALSE(nbest.empty());
    EXPECT_EQ(nbest[0].tokens, best) << "seed " << seed;
    EXPECT_NEAR(nbest[0].logprob, lp, 1e-12);
  }
}

TEST(BeamSearch, StoredLogprobsRecomputeAndListIsSorted) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto t = make_tiny(seed, 4, 2.0);
    const Seq2SeqModel m(t.cfg, t.params, t.table);
    const Tokens src{2, 3};
    DecodeConfig cfg;
    cfg.max_len = 4;
    const auto nbest = beam_search(m, src, cfg);
    ASSERT_LE(nbest.size(), cfg.beam_width);
    for (std::size_t k = 0; k < nbest.size(); ++k) {
      EXPECT_TRUE(nbest[k].finished);
      EXPECT_EQ(nbest[k].tokens.back(), m.space().eos());
      EXPECT_LE(nbest[k].logprob, 0.0);
      EXPECT_NEAR(nbest[k].logprob, recompute_logprob(m, src, nbest[k].tokens), 1e-9);
      if (k > 0) EXPECT_FALSE(ranks_before(nbest[k], nbest[k - 1]));
    }
  }
}

TEST(BeamSearch, AllMassOnEosGivesSingleHypothesis) {
  auto t = make_tiny(5, 3);
  t.params.target.projection.setZero();
  t.params.target.projection_b.setZero();
  t.params.target.projection_b(static_cast<Eigen::Index>(t.table->size() + 1)) = 1000.0;
  const Seq2SeqModel m(t.cfg, t.params, t.table);
  const auto nbest = beam_search(m, Tokens{1}, DecodeConfig{});
  ASSERT_EQ(nbest.size(), 1u);
  EXPECT_EQ(nbest[0].tokens, Tokens{m.space().eos()});
  EXPECT_NEAR(nbest[0].logprob, 0.0, 1e-12);
}

TEST(BeamSearch, TiesPreferSmallerIdsThenShorter) {
  EXPECT_TRUE(ranks_before(-1.0, Tokens{1, 5}, -1.0, Tokens{2}));
  EXPECT_TRUE(ranks_before(-1.0, Tokens{1}, -1.0, Tokens{1, 1}));
  EXPECT_FALSE(ranks_before(-1.0, Tokens{1}, -1.0, Tokens{1}));
  EXPECT_TRUE(ranks_before(-0.5, Tokens{9}, -1.0, Tokens{1}));
}

TEST(BeamSearch, MinLenDefersEos) {
  auto t = make_tiny(6, 3);
  t.params.target.projection_b(static_cast<Eigen::Index>(t.table->size() + 1)) = 50.0;
  const Seq2SeqModel m(t.cfg, t.params, t.table);
  DecodeConfig cfg;
  cfg.min_len = 3;
  cfg.max_len = 5;
  for (const auto& h : beam_search(m, Tokens{1}, cfg)) EXPECT_GE(h.tokens.size(), 3u);
  cfg.max_len = 2;
  EXPECT_THROW(beam_search(m, Tokens{1}, cfg), ConfigurationError);
}

TEST(LmScore, DefinitionalExamples) {
  const auto t = make_tiny(21, 3, 1.5);
  const LanguageModel lm(t.cfg, t.params.target, t.table);
  const auto first = lm.step(lm.initial_state(), lm.space().bos());
  EXPECT_NEAR(lm.lm_score(Tokens{2}), std::log(first.distribution(2)), 1e-15);
  const auto second = lm.step(first.state, 2);
  EXPECT_NEAR(lm.lm_score(Tokens{2, 3}), std::log(first.distribution(2)) + std::log(second.distribution(3)), 1e-15);
  EXPECT_THROW(lm.lm_score(Tokens{}), InvalidInput);
  EXPECT_THROW(lm.lm_score(Tokens{77}), InvalidInput);
  EXPECT_LE(lm.lm_score(Tokens{1, 1, 4}), 0.0);
}

TEST(LmScore, MatchesScalarPathOracle) {
  const auto t = make_tiny(23, 2, 1.5);
  const LanguageModel lm(t.cfg, t.params.target, t.table);
  const TokenSpace space{t.table->size()};
  // Enumerate all length-3 paths over the non-PAD ids.
  for (TokenId a = 1; a <= 4; ++a)
    for (TokenId b = 1; b <= 4; ++b)
      for (TokenId c = 1; c <= 4; ++c) {
        const Tokens toks{a, b, c};
        oracle::ScalarState s{{0, 0}, {0, 0}};
        TokenId prev = space.bos();
        double prob = 1.0;
        for (auto tok : toks) {
          s = oracle::lstm_step(embedding_row(t, prev), s, t.params.target.decoder);
          prob *= oracle_softmax_masked(t.params.target, s.h)[static_cast<std::size_t>(tok)];
          prev = tok;
        }
        EXPECT_NEAR(lm.lm_score(toks), std::log(prob), 1e-10);
      }
}

TEST(Mmi, ArithmeticExample) {
  std::vector<Hypothesis> nbest{{{1}, -1.0, {}, true}, {{2}, -1.2, {}, true}};
  const std::vector<double> lm{-0.5, -2.0};
  EXPECT_EQ(mmi_select(nbest, lm, 0.5), 1u);
  EXPECT_EQ(mmi_select(nbest, lm, 0.0), 0u);
  EXPECT_EQ(mmi_score(-1.0, -0.5, 0.5), -0.75);
  EXPECT_DOUBLE_EQ(mmi_score(-1.2, -2.0, 0.5), -0.2);
  EXPECT_EQ(mmi_score(-1.0, -std::numeric_limits<double>::infinity(), 0.0), -1.0);
}

TEST(Mmi, LambdaZeroIsIdentityOnFuzzedLists) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> lp(-20.0, 0.0);
  std::uniform_int_distribution<int> n(1, 8), tok(1, 5);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Hypothesis> nbest(static_cast<std::size_t>(n(rng)));
    std::vector<double> lm(nbest.size());
    for (std::size_t k = 0; k < nbest.size(); ++k) {
      nbest[k].logprob = trial % 3 == 0 ? -1.0 : lp(rng);
      nbest[k].tokens = {tok(rng), tok(rng)};
      lm[k] = trial % 5 == 0 ? -std::numeric_limits<double>::infinity() : lp(rng);
    }
    std::sort(nbest.begin(), nbest.end(), [](const Hypothesis& a, const Hypothesis& b) { return ranks_before(a, b); });
    EXPECT_EQ(mmi_select(nbest, lm, 0.0), 0u);
  }
}

TEST(Mmi, LargeLambdaPicksLeastLikelyUnderLm) {
  std::vector<Hypothesis> nbest{{{1}, -1.0, {}, true}, {{2}, -3.0, {}, true}, {{3}, -2.0, {}, true}};
  const std::vector<double> lm{-1.0, -4.0, -9.0};
  EXPECT_EQ(mmi_select(nbest, lm, 1e6), 2u);
  EXPECT_THROW(mmi_select(std::vector<Hypothesis>{}, std::vector<double>{}, 0.5), InvalidInput);
}

TEST(Generate, FallbackOnDegenerateSource) {
  const auto t = make_tiny(41, 3);
  const Seq2SeqModel m(t.cfg, t.params, t.table);
  const auto g = generate(m, nullptr, "hello!!", DecodeConfig{});
  EXPECT_TRUE(g.fallback);
  EXPECT_EQ(g.text, DecodeConfig{}.fallback_text);
}

TEST(Generate, IsDeterministic) {
  const auto t = make_tiny(43, 5, 2.0);
  const Seq2SeqModel m(t.cfg, t.params, t.table);
  const LanguageModel lm(t.cfg, make_tiny(44, 5, 2.0).params.target, t.table);
  const auto words = toy::ideographs(5);
  const auto a = generate(m, &lm, words[0] + words[3], DecodeConfig{});
  const auto b = generate(m, &lm, words[0] + words[3], DecodeConfig{});
  EXPECT_EQ(a.text, b.text);
  EXPECT_EQ(a.tokens, b.tokens);
  EXPECT_FALSE(a.text.empty());
}

TEST(Serialization, RoundTripIsBitwise) {
  auto t = make_tiny(51, 4, 1.0, true);
  t.cfg.role = Role::counseling;
  const Seq2SeqModel m(t.cfg, t.params, t.table);
  const LanguageModel lm(t.cfg, t.params.target, t.table);
  const auto dir = std::filesystem::temp_directory_path() / ("solace_resp_" + std::to_string(::getpid()));
  m.save(dir / "s2s.json");
  lm.save(dir / "lm.json");
  const auto m2 = Seq2SeqModel::load(dir / "s2s.json", t.table);
  const auto lm2 = LanguageModel::load(dir / "lm.json", t.table);
  EXPECT_TRUE(nn::bitwise_equal(m.params(), m2.params()));
  EXPECT_TRUE(nn::bitwise_equal(lm.params(), lm2.params()));
  EXPECT_THROW(LanguageModel::load(dir / "s2s.json", t.table), ParseError);
  EXPECT_EQ(m2.config().role, Role::counseling);
  EXPECT_EQ(lm2.config().role, Role::lm);
  EXPECT_EQ(lm.to_json().at("role"), "lm");
  auto cfg = t.cfg;
  cfg.role = Role::lm;
  EXPECT_THROW(Seq2SeqModel(cfg, t.params, t.table), ConfigurationError);
  std::filesystem::remove_all(dir);
}

TEST(Convergence, ReversalTask) {
  const auto words = toy::ideographs(20);
  const auto table = toy::random_table(words, 32, 1);
  auto to_examples = [&](const std::vector<std::vector<std::string>>& seqs) {
    std::vector<Seq2SeqExample> out;
    for (const auto& s : seqs) {
      auto ids = ids_of(*table, s);
      Tokens rev(ids.rbegin(), ids.rend());
      out.push_back({ids, rev});
    }
    return out;
  };
  Seq2SeqConfig cfg;
  cfg.schedule.max_epochs = 100;
  const auto trained = train_seq2seq(to_examples(toy::random_sequences(words, 2000, 5, 2)),
                                     to_examples(toy::random_sequences(words, 200, 5, 3)), cfg, table);
  const auto test = toy::random_sequences(words, 200, 5, 4);
  DecodeConfig greedy;
  greedy.beam_width = 1;
  int hits = 0;
  for (const auto& s : test) {
    auto want = s;
    std::reverse(want.begin(), want.end());
    hits += generate(trained.model, nullptr, text_of(s), greedy).text == text_of(want);
  }
  EXPECT_GE(hits, 160) << "exact-match " << hits << "/200";
}
