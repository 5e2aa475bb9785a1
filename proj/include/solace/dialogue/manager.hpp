#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "solace/classifier/classifier.hpp"
#include "solace/dialogue/knowledge.hpp"
#include "solace/dialogue/routing.hpp"
#include "solace/dialogue/session.hpp"
#include "solace/errors.hpp"
#include "solace/nn/checkpoint.hpp"
#include "solace/responder/beam.hpp"

namespace solace::dialogue {

/// Maps a message to a probability in [0, 1].
class TextScorer {
 public:
  virtual ~TextScorer() = default;
  virtual double score(std::string_view text) const = 0;
};

class ReplyGenerator {
 public:
  virtual ~ReplyGenerator() = default;
  virtual responder::Generation reply(std::string_view text) const = 0;
};

class ClassifierScorer : public TextScorer {
 public:
  explicit ClassifierScorer(std::shared_ptr<const classifier::ClassifierModel> model) : model_(std::move(model)) {}
  double score(std::string_view text) const override { return model_->predict_score(text).score; }

 private:
  std::shared_ptr<const classifier::ClassifierModel> model_;
};

class Seq2SeqGenerator : public ReplyGenerator {
 public:
  Seq2SeqGenerator(std::shared_ptr<const responder::Seq2SeqModel> model,
                   std::shared_ptr<const responder::LanguageModel> lm, responder::DecodeConfig cfg)
      : model_(std::move(model)), lm_(std::move(lm)), cfg_(std::move(cfg)) {}

  responder::Generation reply(std::string_view text) const override {
    return responder::generate(*model_, lm_.get(), text, cfg_);
  }

 private:
  std::shared_ptr<const responder::Seq2SeqModel> model_;
  std::shared_ptr<const responder::LanguageModel> lm_;
  responder::DecodeConfig cfg_;
};

/// Loaded once and shared read-only by every session.
struct ModelBundle {
  std::shared_ptr<const TextScorer> mental;     // relatedness classifier
  std::shared_ptr<const TextScorer> sentiment;  // sentiment classifier
  std::shared_ptr<const ReplyGenerator> casual;
  std::shared_ptr<const ReplyGenerator> counseling;

  const ReplyGenerator& generator(Bot b) const { return b == Bot::casual ? *casual : *counseling; }
};

struct DialogueConfig {
  TrendConfig trend;
  std::chrono::milliseconds idle_expiry = std::chrono::hours(24);
  std::filesystem::path session_dir;  // empty keeps sessions in memory only
  std::string fallback_text = responder::DecodeConfig{}.fallback_text;
  std::uint64_t id_seed = 0;  // 0 draws from std::random_device
};

/// Owns sessions; one respond at a time per session, distinct sessions in
/// parallel.
class DialogueManager {
 public:
  DialogueManager(ModelBundle models, std::shared_ptr<KnowledgeSink> store, DialogueConfig cfg = {},
                  Clock clock = system_clock())
      : models_(std::move(models)), store_(std::move(store)), cfg_(std::move(cfg)), clock_(std::move(clock)),
        rng_(cfg_.id_seed ? cfg_.id_seed : std::random_device{}()) {
    cfg_.trend.validate();
    if (!models_.mental || !models_.sentiment || !models_.casual || !models_.counseling)
      throw ConfigurationError("dialogue manager needs both classifiers and both responders");
    if (!store_) throw ConfigurationError("dialogue manager needs a knowledge store");
    if (!cfg_.session_dir.empty()) load_sessions();
  }

  std::string create_session() {
    Session s;
    s.mental_buf = ScoreWindow(cfg_.trend.window);
    s.sent_buf = ScoreWindow(cfg_.trend.window);
    s.created_ms = s.updated_ms = now_ms();
    std::lock_guard lock(map_mu_);
    do {
      s.id = fresh_id();
    } while (sessions_.contains(s.id));
    auto entry = std::make_shared<Entry>();
    entry->session = std::move(s);
    persist(entry->session);
    const auto id = entry->session.id;
    sessions_.emplace(id, std::move(entry));
    return id;
  }

  bool has_session(const std::string& id) { return find(id) != nullptr; }

  /// Scores, routes, replies, updates the trend and logs one Q&A record.
  Turn respond(const std::string& id, std::string_view text) {
    auto entry = find(id);
    if (!entry) throw NotFound("unknown or expired session '" + id + "'");
    std::lock_guard lock(entry->mu);
    Session& s = entry->session;

    Turn t;
    t.user_text = std::string(text);
    t.timestamp_ms = now_ms();
    t.mental_score = models_.mental->score(text);
    t.sentiment_score = models_.sentiment->score(text);
    t.routed_bot = route_message(t.mental_score, t.sentiment_score);
    t.trend_override = s.override_bot;
    t.bot_used = s.override_bot.value_or(t.routed_bot);

    try {
      auto g = models_.generator(t.bot_used).reply(text);
      t.reply_text = std::move(g.text);
      t.fallback = g.fallback;
      if (t.reply_text.empty()) throw Error("responder returned an empty reply");
    } catch (const std::exception& e) {
      t.reply_text = cfg_.fallback_text;
      t.fallback = true;
      t.error = e.what();
    }

    s.mental_buf.push(t.mental_score);
    s.sent_buf.push(t.sentiment_score);
    s.active_bot = t.bot_used;
    update_trend(s, cfg_.trend);

    const KnowledgeRecord rec{s.id, t.user_text, t.reply_text, t.mental_score, t.sentiment_score, t.bot_used,
                              t.timestamp_ms};
    for (int attempt = 0; attempt < 2; ++attempt) {
      try {
        store_->append(rec);
        t.store_error.clear();
        break;
      } catch (const std::exception& e) {
        t.store_error = e.what();
      }
    }

    s.turns.push_back(t);
    s.updated_ms = t.timestamp_ms;
    persist(s);
    return t;
  }

  /// Snapshot of a live session.
  Session history(const std::string& id) {
    auto entry = find(id);
    if (!entry) throw NotFound("unknown or expired session '" + id + "'");
    std::lock_guard lock(entry->mu);
    return entry->session;
  }

  /// Drops sessions idle longer than the expiry; returns how many.
  std::size_t purge_expired() {
    std::lock_guard lock(map_mu_);
    std::size_t n = 0;
    for (auto it = sessions_.begin(); it != sessions_.end();) {
      if (expired(*it->second)) {
        remove_file(it->first);
        it = sessions_.erase(it);
        ++n;
      } else {
        ++it;
      }
    }
    return n;
  }

  std::size_t session_count() {
    std::lock_guard lock(map_mu_);
    return sessions_.size();
  }

  const KnowledgeSink& store() const { return *store_; }
  const DialogueConfig& config() const { return cfg_; }

 private:
  struct Entry {
    std::mutex mu;
    Session session;
  };

  std::int64_t now_ms() const { return to_unix_ms(clock_()); }

  bool expired(Entry& e) {
    std::lock_guard lock(e.mu);
    return now_ms() - e.session.updated_ms > cfg_.idle_expiry.count();
  }

  std::shared_ptr<Entry> find(const std::string& id) {
    std::lock_guard lock(map_mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) return nullptr;
    if (expired(*it->second)) {
      remove_file(id);
      sessions_.erase(it);
      return nullptr;
    }
    return it->second;
  }

  std::string fresh_id() {
    char buf[33];
    std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng_()),
                  static_cast<unsigned long long>(rng_()));
    return buf;
  }

  std::filesystem::path session_path(const std::string& id) const { return cfg_.session_dir / (id + ".json"); }

  void persist(const Session& s) const {
    if (!cfg_.session_dir.empty()) nn::write_json_file(session_path(s.id), s.to_json());
  }

  void remove_file(const std::string& id) const {
    if (cfg_.session_dir.empty()) return;
    std::error_code ec;
    std::filesystem::remove(session_path(id), ec);
  }

  void load_sessions() {
    std::filesystem::create_directories(cfg_.session_dir);
    for (const auto& f : std::filesystem::directory_iterator(cfg_.session_dir)) {
      if (f.path().extension() != ".json") continue;
      auto entry = std::make_shared<Entry>();
      entry->session = Session::from_json(nn::read_json_file(f.path()));
      if (expired(*entry)) {
        std::error_code ec;
        std::filesystem::remove(f.path(), ec);
        continue;
      }
      const auto id = entry->session.id;
      sessions_.emplace(id, std::move(entry));
    }
  }

  ModelBundle models_;
  std::shared_ptr<KnowledgeSink> store_;
  DialogueConfig cfg_;
  Clock clock_;
  std::mutex map_mu_;
  std::mt19937_64 rng_;
  std::unordered_map<std::string, std::shared_ptr<Entry>> sessions_;
};

}  // namespace solace::dialogue
