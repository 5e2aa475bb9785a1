#pragma once

// Windowed sentiment means over the knowledge store, written as CSV for
// external plotting.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "solace/dialogue/knowledge.hpp"
#include "solace/errors.hpp"

namespace solace::service {

enum class Cohort { all, session };

struct TrajectoryRow {
  std::string cohort;  // "all" or a session id
  std::int64_t window = 0;
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;  // exclusive
  std::size_t count = 0;
  double mean_sentiment = 0.0;
};

/// Windows are [t0 + k*w, t0 + (k+1)*w) with t0 the earliest timestamp in
/// the store, shared by every cohort. Empty windows produce no row. Rows
/// are ordered by cohort name (with "all" alone), then window.
inline std::vector<TrajectoryRow> sentiment_trajectory(std::span<const dialogue::KnowledgeRecord> records,
                                                       std::chrono::milliseconds window = std::chrono::hours(48),
                                                       Cohort cohort = Cohort::all) {
  if (window.count() <= 0) throw ConfigurationError("trajectory window must be positive");
  if (records.empty()) return {};
  const std::int64_t t0 =
      std::min_element(records.begin(), records.end(), [](const auto& a, const auto& b) {
        return a.timestamp_ms < b.timestamp_ms;
      })->timestamp_ms;
  const std::int64_t w = window.count();

  struct Acc {
    std::size_t n = 0;
    double sum = 0.0;
  };
  std::map<std::pair<std::string, std::int64_t>, Acc> acc;
  for (const auto& r : records) {
    const std::int64_t k = (r.timestamp_ms - t0) / w;
    auto& a = acc[{cohort == Cohort::all ? std::string("all") : r.session_id, k}];
    ++a.n;
    a.sum += r.sentiment_score;
  }
  std::vector<TrajectoryRow> out;
  out.reserve(acc.size());
  for (const auto& [key, a] : acc)
    out.push_back({key.first, key.second, t0 + key.second * w, t0 + (key.second + 1) * w, a.n,
                   a.sum / static_cast<double>(a.n)});
  return out;
}

inline void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRow>& rows) {
  out << "cohort,window,start_ms,end_ms,n,mean_sentiment\n";
  out.precision(17);
  for (const auto& r : rows)
    out << r.cohort << ',' << r.window << ',' << r.start_ms << ',' << r.end_ms << ',' << r.count << ','
        << r.mean_sentiment << '\n';
}

}  // namespace solace::service
