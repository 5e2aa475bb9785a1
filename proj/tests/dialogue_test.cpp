#include <gtest/gtest.h>

#include <atomic>
#include <random>
#include <sstream>
#include <thread>

#include "solace/corpus/conv.hpp"
#include "solace/dialogue/manager.hpp"
#include "stubs.hpp"

using namespace solace;
using namespace solace::dialogue;
using namespace solace::stubs;

namespace {

std::filesystem::path temp_dir(const std::string& tag) {
  auto d = std::filesystem::temp_directory_path() / ("solace_dlg_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(d);
  return d;
}

}  // namespace

TEST(Routing, CascadeExamples) {
  EXPECT_EQ(route_message(0.3, 0.2), Bot::casual);
  EXPECT_EQ(route_message(0.8, 0.7), Bot::casual);
  EXPECT_EQ(route_message(0.8, 0.2), Bot::counseling);
  EXPECT_EQ(route_message(0.5, 0.4999), Bot::counseling);
  EXPECT_EQ(route_message(0.4999, 0.0), Bot::casual);
}

TEST(Routing, ExhaustiveGridMatchesThreeBranches) {
  for (int a = 0; a <= 100; ++a) {
    for (int b = 0; b <= 100; ++b) {
      const double m = a / 100.0, s = b / 100.0;
      Bot want;
      if (!(m >= 0.5)) want = Bot::casual;
      else if (s >= 0.5) want = Bot::casual;
      else want = Bot::counseling;
      ASSERT_EQ(route_message(m, s), want) << m << "," << s;
    }
  }
}

TEST(Routing, OutOfRangeRejected) {
  EXPECT_THROW(route_message(-0.01, 0.5), InvalidInput);
  EXPECT_THROW(route_message(0.5, 1.01), InvalidInput);
  EXPECT_THROW(route_message(std::nan(""), 0.5), InvalidInput);
}

TEST(ScoreWindow, NeverExceedsCapacityAndMeansMatchBruteForce) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  ScoreWindow w(5);
  std::vector<double> all;
  for (int k = 0; k < 200; ++k) {
    all.push_back(d(rng));
    w.push(all.back());
    ASSERT_LE(w.size(), 5u);
    const std::size_t n = std::min<std::size_t>(5, all.size());
    double sum = 0.0;
    for (std::size_t j = all.size() - n; j < all.size(); ++j) sum += all[j];
    EXPECT_NEAR(w.mean(), sum / static_cast<double>(n), 1e-12);
  }
}

TEST(Trend, WarmupAndBothBranches) {
  Session s;
  const TrendConfig cfg;
  for (int k = 0; k < 4; ++k) {
    s.mental_buf.push(0.7);
    s.sent_buf.push(0.3);
  }
  EXPECT_FALSE(update_trend(s, cfg).has_value());
  EXPECT_FALSE(s.override_bot.has_value());
  s.mental_buf.push(0.7);
  s.sent_buf.push(0.3);
  EXPECT_EQ(update_trend(s, cfg), Bot::counseling);
  EXPECT_EQ(s.active_bot, Bot::counseling);
  for (int k = 0; k < 5; ++k) s.sent_buf.push(0.6);
  EXPECT_EQ(update_trend(s, cfg), Bot::casual);
  EXPECT_EQ(s.override_bot, Bot::casual);
}

TEST(Trend, KnobsAreHonored) {
  EXPECT_THROW((TrendConfig{0.5, 0.5, 3, 4}.validate()), ConfigurationError);
  ScoreWindow m(3), s(3);
  for (int k = 0; k < 2; ++k) {
    m.push(0.65);
    s.push(0.2);
  }
  const TrendConfig cfg{0.6, 0.5, 3, 2};
  EXPECT_EQ(trend_decision(m, s, cfg), Bot::counseling);
  EXPECT_EQ(trend_decision(m, s, TrendConfig{0.7, 0.5, 3, 2}), Bot::casual);
}

TEST(Manager, FreshSessionCasualMessageUsesCasual) {
  DialogueManager dm(stub_bundle(), std::make_shared<MemoryKnowledgeStore>());
  const auto id = dm.create_session();
  const auto t = dm.respond(id, msg(0.1, 0.9));
  EXPECT_EQ(t.bot_used, Bot::casual);
  EXPECT_EQ(t.reply_text, "casual:" + msg(0.1, 0.9));
  EXPECT_EQ(dm.history(id).active_bot, Bot::casual);
}

TEST(Manager, TrendSwitchesExactlyAtTurnSix) {
  DialogueManager dm(stub_bundle(), std::make_shared<MemoryKnowledgeStore>());
  const auto id = dm.create_session();
  // Each of the first five routes casual on its own; their averages
  // (mental 0.7, sentiment 0.4) form a negative mental-health trend.
  const std::vector<std::pair<double, double>> script{{0.9, 0.6}, {0.9, 0.6}, {0.9, 0.6}, {0.4, 0.1}, {0.4, 0.1}};
  for (const auto& [m, s] : script) {
    const auto t = dm.respond(id, msg(m, s));
    EXPECT_EQ(route_message(m, s), Bot::casual);
    EXPECT_EQ(t.bot_used, Bot::casual);
  }
  const auto sixth = dm.respond(id, msg(0.1, 0.9));
  EXPECT_EQ(sixth.routed_bot, Bot::casual);
  EXPECT_EQ(sixth.trend_override, Bot::counseling);
  EXPECT_EQ(sixth.bot_used, Bot::counseling);
}

TEST(Manager, FiveNegativeMessagesSendSixthToCounseling) {
  DialogueManager dm(stub_bundle(), std::make_shared<MemoryKnowledgeStore>());
  const auto id = dm.create_session();
  for (int k = 0; k < 5; ++k) dm.respond(id, msg(0.8, 0.2));
  EXPECT_EQ(dm.respond(id, msg(0.0, 1.0)).bot_used, Bot::counseling);
}

TEST(Manager, OverrideIsStickyUntilOppositeTrend) {
  DialogueManager dm(stub_bundle(), std::make_shared<MemoryKnowledgeStore>());
  const auto id = dm.create_session();
  for (int k = 0; k < 5; ++k) dm.respond(id, msg(0.9, 0.1));
  // Mildly positive messages: the average stays negative for a while.
  std::vector<Bot> used;
  for (int k = 0; k < 5; ++k) used.push_back(dm.respond(id, msg(0.9, 0.9)).bot_used);
  // Sentiment window after k positives: mean = (0.1 * (5-k) + 0.9 * k) / 5.
  // It reaches >= 0.5 after the third positive, so the fourth reply is casual.
  EXPECT_EQ(used, (std::vector<Bot>{Bot::counseling, Bot::counseling, Bot::counseling, Bot::casual, Bot::casual}));
}

TEST(Manager, EveryRespondAppendsOneRecord) {
  auto store = std::make_shared<MemoryKnowledgeStore>();
  DialogueManager dm(stub_bundle(), store);
  const auto a = dm.create_session();
  const auto b = dm.create_session();
  for (int k = 0; k < 7; ++k) {
    dm.respond(k % 2 ? a : b, msg(0.2 * (k % 5), 0.5));
    EXPECT_EQ(store->size(), static_cast<std::size_t>(k + 1));
  }
  const auto recs = store->records();
  EXPECT_EQ(recs[0].session_id, b);
  EXPECT_EQ(recs[0].answer, "casual:" + msg(0.0, 0.5));
}

TEST(Manager, ResponderFailureFallsBack) {
  DialogueManager dm(stub_bundle(std::make_shared<ThrowingGenerator>()), std::make_shared<MemoryKnowledgeStore>());
  const auto id = dm.create_session();
  const auto t = dm.respond(id, msg(0.9, 0.1));
  EXPECT_EQ(t.bot_used, Bot::counseling);
  EXPECT_TRUE(t.fallback);
  EXPECT_EQ(t.reply_text, DialogueConfig{}.fallback_text);
  EXPECT_NE(t.error.find("decoder exploded"), std::string::npos);
  EXPECT_EQ(dm.store().size(), 1u);
}

TEST(Manager, StoreRetriesOnceThenSurfaces) {
  auto once = std::make_shared<FlakySink>(1);
  DialogueManager dm1(stub_bundle(), once);
  const auto t1 = dm1.respond(dm1.create_session(), msg(0.1, 0.1));
  EXPECT_TRUE(t1.store_error.empty());
  EXPECT_EQ(once->size(), 1u);

  auto twice = std::make_shared<FlakySink>(2);
  DialogueManager dm2(stub_bundle(), twice);
  const auto t2 = dm2.respond(dm2.create_session(), msg(0.1, 0.1));
  EXPECT_EQ(t2.store_error, "disk full");
  EXPECT_FALSE(t2.reply_text.empty());
  EXPECT_EQ(twice->size(), 0u);
}

TEST(Manager, UnknownSessionIsNotFound) {
  DialogueManager dm(stub_bundle(), std::make_shared<MemoryKnowledgeStore>());
  EXPECT_THROW(dm.respond("nope", msg(0.1, 0.1)), NotFound);
  EXPECT_THROW(dm.history("nope"), NotFound);
}

TEST(Manager, SessionsExpireAfterIdleWindow) {
  FakeClock fc;
  DialogueManager dm(stub_bundle(), std::make_shared<MemoryKnowledgeStore>(), {}, fc.clock());
  const auto id = dm.create_session();
  fc.advance(std::chrono::hours(23));
  dm.respond(id, msg(0.1, 0.1));
  fc.advance(std::chrono::hours(24));
  EXPECT_NO_THROW(dm.history(id));
  fc.advance(std::chrono::milliseconds(1));
  EXPECT_THROW(dm.history(id), NotFound);
  EXPECT_EQ(dm.session_count(), 0u);
}

TEST(Manager, PersistedSessionsSurviveRestart) {
  FakeClock fc;
  DialogueConfig cfg;
  cfg.session_dir = temp_dir("persist");
  std::string id;
  {
    DialogueManager dm(stub_bundle(), std::make_shared<MemoryKnowledgeStore>(), cfg, fc.clock());
    id = dm.create_session();
    for (int k = 0; k < 5; ++k) dm.respond(id, msg(0.9, 0.1));
    EXPECT_EQ(dm.history(id).active_bot, Bot::counseling);
  }
  {
    DialogueManager dm(stub_bundle(), std::make_shared<MemoryKnowledgeStore>(), cfg, fc.clock());
    const auto s = dm.history(id);
    EXPECT_EQ(s.turns.size(), 5u);
    EXPECT_EQ(s.active_bot, Bot::counseling);
    EXPECT_EQ(s.override_bot, Bot::counseling);
    EXPECT_EQ(dm.respond(id, msg(0.0, 1.0)).bot_used, Bot::counseling);
  }
  fc.advance(std::chrono::hours(25));
  {
    DialogueManager dm(stub_bundle(), std::make_shared<MemoryKnowledgeStore>(), cfg, fc.clock());
    EXPECT_EQ(dm.session_count(), 0u);
    EXPECT_TRUE(std::filesystem::is_empty(cfg.session_dir));
  }
  std::filesystem::remove_all(cfg.session_dir);
}

TEST(Manager, ReplayIsDeterministic) {
  auto run = [] {
    FakeClock fc;
    DialogueConfig cfg;
    cfg.id_seed = 9;
    DialogueManager dm(stub_bundle(), std::make_shared<MemoryKnowledgeStore>(), cfg, fc.clock());
    const auto id = dm.create_session();
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> d(0.0, 1.0);
    for (int k = 0; k < 30; ++k) {
      dm.respond(id, msg(d(rng), d(rng)));
      fc.advance(std::chrono::seconds(1));
    }
    return dm.history(id).to_json();
  };
  EXPECT_EQ(run(), run());
}

TEST(Manager, ConcurrentSessionsKeepCountsConsistent) {
  auto store = std::make_shared<MemoryKnowledgeStore>();
  DialogueManager dm(stub_bundle(), store);
  std::vector<std::string> ids;
  for (int k = 0; k < 4; ++k) ids.push_back(dm.create_session());
  std::vector<std::thread> workers;
  for (int w = 0; w < 8; ++w) {
    workers.emplace_back([&, w] {
      for (int k = 0; k < 25; ++k) dm.respond(ids[static_cast<std::size_t>(w % 4)], msg(0.3, 0.3));
    });
  }
  for (auto& t : workers) t.join();
  EXPECT_EQ(store->size(), 200u);
  for (const auto& id : ids) EXPECT_EQ(dm.history(id).turns.size(), 50u);
}

TEST(Knowledge, ExportTwoSessionsTwoTurns) {
  auto store = std::make_shared<MemoryKnowledgeStore>();
  DialogueManager dm(stub_bundle(), store);
  const auto a = dm.create_session();
  const auto b = dm.create_session();
  dm.respond(a, msg(0.1, 0.1, "甲"));
  dm.respond(b, msg(0.1, 0.1, "乙"));
  dm.respond(a, msg(0.1, 0.1, "丙"));
  dm.respond(b, msg(0.1, 0.1, "丁"));
  std::ostringstream out;
  export_conv(store->records(), out);
  std::istringstream in(out.str());
  const auto parsed = corpus::parse_conv(in);
  ASSERT_EQ(parsed.conversations.size(), 2u);
  EXPECT_EQ(parsed.conversations[0].utterances.size(), 4u);
  EXPECT_EQ(parsed.conversations[0].utterances[0], msg(0.1, 0.1, "甲"));
  EXPECT_EQ(parsed.conversations[0].utterances[3], "casual:" + msg(0.1, 0.1, "丙"));
  EXPECT_EQ(parsed.conversations[1].utterances[2], msg(0.1, 0.1, "丁"));
}

TEST(Knowledge, FileStoreAppendsAndReloads) {
  const auto dir = temp_dir("store");
  const auto path = dir / "knowledge.ndjson";
  {
    FileKnowledgeStore store(path);
    store.append({"s1", "问\n题", "答", 0.25, 0.75, Bot::counseling, 1000});
    store.append({"s1", "q2", "a2", 0.5, 0.5, Bot::casual, 2000});
    EXPECT_EQ(store.size(), 2u);
  }
  FileKnowledgeStore again(path);
  EXPECT_EQ(again.size(), 2u);
  const auto recs = again.records();
  EXPECT_EQ(recs[0].question, "问\n题");
  EXPECT_EQ(recs[0].bot_used, Bot::counseling);
  EXPECT_EQ(recs[1].timestamp_ms, 2000);
  std::ostringstream out;
  export_conv(recs, out);
  std::istringstream in(out.str());
  EXPECT_EQ(corpus::parse_conv(in).conversations[0].utterances[0], "问 题");
  std::filesystem::remove_all(dir);
}

TEST(Knowledge, CorruptLineReportsLineNumber) {
  const auto dir = temp_dir("corrupt");
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "k.ndjson");
    f << KnowledgeRecord{"s", "q", "a", 0, 0, Bot::casual, 1}.to_json().dump() << "\n{oops\n";
  }
  try {
    read_knowledge_file(dir / "k.ndjson");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::filesystem::remove_all(dir);
}
