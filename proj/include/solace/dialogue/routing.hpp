#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>

#include "solace/errors.hpp"

namespace solace::dialogue {

enum class Bot { casual, counseling };

inline std::string_view to_string(Bot b) { return b == Bot::casual ? "casual" : "counseling"; }

inline Bot bot_from_string(std::string_view s) {
  if (s == "casual") return Bot::casual;
  if (s == "counseling") return Bot::counseling;
  throw ParseError(0, "unknown bot '" + std::string(s) + "'");
}

inline void require_score(double s, const char* what) {
  if (!(s >= 0.0 && s <= 1.0)) throw InvalidInput(std::string(what) + " score must be in [0, 1]");
}

/// Per-message cascade: not mental-health related -> casual; related but
/// positive -> casual; related and negative -> counseling.
inline Bot route_message(double mental_score, double sentiment_score, double mental_threshold = 0.5,
                         double sentiment_threshold = 0.5) {
  require_score(mental_score, "mental");
  require_score(sentiment_score, "sentiment");
  if (mental_score < mental_threshold) return Bot::casual;
  if (sentiment_score >= sentiment_threshold) return Bot::casual;
  return Bot::counseling;
}

/// Moving-average switch knobs. The trend engages once both windows hold
/// `warmup` scores.
struct TrendConfig {
  double mental_threshold = 0.5;
  double sentiment_threshold = 0.5;
  std::size_t window = 5;
  std::size_t warmup = 5;

  void validate() const {
    if (window < 1) throw ConfigurationError("trend window must be at least 1");
    if (warmup < 1 || warmup > window) throw ConfigurationError("trend warmup must be in [1, window]");
    if (!(mental_threshold >= 0.0 && mental_threshold <= 1.0) ||
        !(sentiment_threshold >= 0.0 && sentiment_threshold <= 1.0))
      throw ConfigurationError("trend thresholds must be in [0, 1]");
  }
};

/// The last `capacity` scores, oldest first.
class ScoreWindow {
 public:
  explicit ScoreWindow(std::size_t capacity = 5) : capacity_(capacity) {}

  void push(double s) {
    values_.push_back(s);
    while (values_.size() > capacity_) values_.pop_front();
  }

  std::size_t size() const { return values_.size(); }
  std::size_t capacity() const { return capacity_; }
  double mean() const {
    return values_.empty() ? 0.0 : std::accumulate(values_.begin(), values_.end(), 0.0) / static_cast<double>(values_.size());
  }
  const std::deque<double>& values() const { return values_; }

 private:
  std::size_t capacity_;
  std::deque<double> values_;
};

/// Trend decision on the two windows, or nullopt during warm-up. Once
/// engaged the two branches are complementary, so a bot is always forced.
inline std::optional<Bot> trend_decision(const ScoreWindow& mental, const ScoreWindow& sentiment,
                                         const TrendConfig& cfg) {
  if (mental.size() < cfg.warmup || sentiment.size() < cfg.warmup) return std::nullopt;
  if (mental.mean() >= cfg.mental_threshold && sentiment.mean() < cfg.sentiment_threshold) return Bot::counseling;
  return Bot::casual;
}

}  // namespace solace::dialogue
