#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "solace/errors.hpp"

namespace solace::classifier {

struct EvalReport {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  std::vector<std::string> warnings;

  std::size_t total() const { return tp + fp + fn + tn; }

  nlohmann::json to_json() const {
    return {{"tp", tp},         {"fp", fp},         {"fn", fn}, {"tn", tn},
            {"precision", precision}, {"recall", recall}, {"f1", f1}, {"accuracy", accuracy},
            {"warnings", warnings}};
  }
};

inline double f1_score(double precision, double recall) {
  return precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

/// Fills the ratios from the confusion counts. A zero denominator yields 0
/// and a warning.
inline void finalize(EvalReport& r) {
  if (r.tp + r.fp > 0) {
    r.precision = static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp);
  } else {
    r.precision = 0.0;
    r.warnings.emplace_back("precision undefined (no positive predictions); reported as 0");
  }
  if (r.tp + r.fn > 0) {
    r.recall = static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn);
  } else {
    r.recall = 0.0;
    r.warnings.emplace_back("recall undefined (no positive labels); reported as 0");
  }
  r.f1 = f1_score(r.precision, r.recall);
  r.accuracy = r.total() ? static_cast<double>(r.tp + r.tn) / static_cast<double>(r.total()) : 0.0;
}

inline EvalReport confusion_report(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) throw InvalidInput("confusion_report: length mismatch");
  if (truth.empty()) throw InvalidInput("confusion_report: empty test set");
  EvalReport r;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const bool t = truth[k] == 1;
    const bool p = predicted[k] == 1;
    if (t && p) ++r.tp;
    else if (!t && p) ++r.fp;
    else if (t && !p) ++r.fn;
    else ++r.tn;
  }
  finalize(r);
  return r;
}

}  // namespace solace::classifier
