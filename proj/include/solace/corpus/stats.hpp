#pragma once

#include <optional>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "solace/corpus/filter.hpp"
#include "solace/text/dataset.hpp"

namespace solace::corpus {

/// Two-way count split; the fraction is undefined for an empty corpus.
struct ProportionSummary {
  std::string positive_name = "related";
  std::string negative_name = "casual";
  std::size_t positive = 0;
  std::size_t negative = 0;

  std::size_t total() const { return positive + negative; }
  std::optional<double> positive_fraction() const {
    if (total() == 0) return std::nullopt;
    return static_cast<double>(positive) / static_cast<double>(total());
  }

  nlohmann::json to_json() const {
    const auto f = positive_fraction();
    return {{positive_name, positive},
            {negative_name, negative},
            {"total", total()},
            {positive_name + "_fraction", f ? nlohmann::json(*f) : nlohmann::json(nullptr)}};
  }
};

inline ProportionSummary corpus_stats(std::size_t negative, std::size_t positive) {
  ProportionSummary s;
  s.negative = negative;
  s.positive = positive;
  return s;
}

/// Label 1 counts as related, label 0 as casual.
inline ProportionSummary corpus_stats(std::span<const text::LabeledText> rows) {
  ProportionSummary s;
  for (const auto& r : rows) (r.label == 1 ? s.positive : s.negative)++;
  return s;
}

inline ProportionSummary corpus_stats(const FilterReport& r) {
  ProportionSummary s;
  s.positive_name = "retained";
  s.negative_name = "dropped";
  s.positive = r.retained;
  s.negative = r.dropped;
  return s;
}

}  // namespace solace::corpus
