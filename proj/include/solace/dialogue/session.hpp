#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "solace/dialogue/routing.hpp"

namespace solace::dialogue {

using Clock = std::function<std::chrono::system_clock::time_point()>;

inline Clock system_clock() {
  return [] { return std::chrono::system_clock::now(); };
}

inline std::int64_t to_unix_ms(std::chrono::system_clock::time_point t) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch()).count();
}

struct Turn {
  std::string user_text;
  std::string reply_text;
  double mental_score = 0.0;
  double sentiment_score = 0.0;
  Bot bot_used = Bot::casual;
  Bot routed_bot = Bot::casual;         // what route_message alone chose
  std::optional<Bot> trend_override;    // set when the moving-average switch decided
  bool fallback = false;                // reply is the canned fallback
  std::string error;                    // responder failure, if any
  std::string store_error;              // knowledge-store failure after one retry
  std::int64_t timestamp_ms = 0;

  nlohmann::json to_json() const {
    nlohmann::json j{{"user_text", user_text},
                     {"reply_text", reply_text},
                     {"mental_score", mental_score},
                     {"sentiment_score", sentiment_score},
                     {"bot_used", std::string(to_string(bot_used))},
                     {"routed_bot", std::string(to_string(routed_bot))},
                     {"trend_override", trend_override ? nlohmann::json(std::string(to_string(*trend_override)))
                                                       : nlohmann::json(nullptr)},
                     {"fallback", fallback},
                     {"timestamp_ms", timestamp_ms}};
    if (!error.empty()) j["error"] = error;
    if (!store_error.empty()) j["store_error"] = store_error;
    return j;
  }

  static Turn from_json(const nlohmann::json& j) {
    Turn t;
    t.user_text = j.at("user_text").get<std::string>();
    t.reply_text = j.at("reply_text").get<std::string>();
    t.mental_score = j.at("mental_score").get<double>();
    t.sentiment_score = j.at("sentiment_score").get<double>();
    t.bot_used = bot_from_string(j.at("bot_used").get<std::string>());
    t.routed_bot = bot_from_string(j.at("routed_bot").get<std::string>());
    if (!j.at("trend_override").is_null()) t.trend_override = bot_from_string(j.at("trend_override").get<std::string>());
    t.fallback = j.value("fallback", false);
    t.error = j.value("error", "");
    t.store_error = j.value("store_error", "");
    t.timestamp_ms = j.at("timestamp_ms").get<std::int64_t>();
    return t;
  }
};

struct Session {
  std::string id;
  std::vector<Turn> turns;
  ScoreWindow mental_buf{5};
  ScoreWindow sent_buf{5};
  Bot active_bot = Bot::casual;      // bot that will answer next unless routing says otherwise
  std::optional<Bot> override_bot;   // sticky trend decision
  std::int64_t created_ms = 0;
  std::int64_t updated_ms = 0;

  nlohmann::json to_json() const {
    nlohmann::json turns_j = nlohmann::json::array();
    for (const auto& t : turns) turns_j.push_back(t.to_json());
    return {{"id", id},
            {"turns", std::move(turns_j)},
            {"mental_buf", mental_buf.values()},
            {"sent_buf", sent_buf.values()},
            {"window", mental_buf.capacity()},
            {"active_bot", std::string(to_string(active_bot))},
            {"override_bot",
             override_bot ? nlohmann::json(std::string(to_string(*override_bot))) : nlohmann::json(nullptr)},
            {"created_ms", created_ms},
            {"updated_ms", updated_ms}};
  }

  static Session from_json(const nlohmann::json& j) {
    Session s;
    s.id = j.at("id").get<std::string>();
    for (const auto& t : j.at("turns")) s.turns.push_back(Turn::from_json(t));
    const auto window = j.value("window", std::size_t{5});
    s.mental_buf = ScoreWindow(window);
    s.sent_buf = ScoreWindow(window);
    for (double v : j.at("mental_buf")) s.mental_buf.push(v);
    for (double v : j.at("sent_buf")) s.sent_buf.push(v);
    s.active_bot = bot_from_string(j.at("active_bot").get<std::string>());
    if (!j.at("override_bot").is_null()) s.override_bot = bot_from_string(j.at("override_bot").get<std::string>());
    s.created_ms = j.at("created_ms").get<std::int64_t>();
    s.updated_ms = j.at("updated_ms").get<std::int64_t>();
    return s;
  }
};

/// Re-evaluates the moving-average trend after a turn's scores were pushed.
/// The decision sticks until a later evaluation flips it.
inline std::optional<Bot> update_trend(Session& s, const TrendConfig& cfg) {
  const auto d = trend_decision(s.mental_buf, s.sent_buf, cfg);
  if (d) {
    s.override_bot = d;
    s.active_bot = *d;
  }
  return d;
}

}  // namespace solace::dialogue
