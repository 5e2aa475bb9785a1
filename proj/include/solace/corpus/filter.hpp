#pragma once

#include <algorithm>
#include <array>
#include <concepts>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "solace/classifier/classifier.hpp"
#include "solace/corpus/conv.hpp"
#include "solace/errors.hpp"

namespace solace::corpus {

inline constexpr double kDefaultFilterThreshold = 0.7;

/// Anything mapping an utterance to a relatedness score in [0, 1].
template <class S>
concept UtteranceScorer = requires(const S& s, std::string_view u) {
  { s(u) } -> std::convertible_to<double>;
};

struct FilterReport {
  std::size_t total_conversations = 0;
  std::size_t retained = 0;
  std::size_t dropped = 0;
  std::size_t utterances_scored = 0;
  std::array<std::size_t, 10> histogram{};  // bin k holds [k/10, (k+1)/10); 1.0 lands in bin 9
  double threshold = kDefaultFilterThreshold;
  std::vector<std::string> warnings;

  std::optional<double> retained_fraction() const {
    if (total_conversations == 0) return std::nullopt;
    return static_cast<double>(retained) / static_cast<double>(total_conversations);
  }

  void add_score(double s) {
    auto bin = static_cast<std::size_t>(std::clamp(s, 0.0, 1.0) * 10.0);
    ++histogram[std::min<std::size_t>(bin, 9)];
    ++utterances_scored;
  }

  nlohmann::json to_json() const {
    const auto frac = retained_fraction();
    return {{"total_conversations", total_conversations},
            {"retained", retained},
            {"dropped", dropped},
            {"retained_fraction", frac ? nlohmann::json(*frac) : nlohmann::json(nullptr)},
            {"threshold", threshold},
            {"utterances_scored", utterances_scored},
            {"histogram", histogram},
            {"warnings", warnings}};
  }
};

/// True iff any utterance scores >= threshold. Every utterance is scored so
/// the histogram covers the whole corpus.
template <UtteranceScorer S>
bool keep_conversation(const Conversation& conv, const S& scorer, double threshold, FilterReport& report) {
  bool keep = false;
  for (const auto& u : conv.utterances) {
    const double s = scorer(u);
    report.add_score(s);
    keep = keep || s >= threshold;
  }
  return keep;
}

/// In-memory selection: retained conversations in input order, unmodified.
template <UtteranceScorer S>
std::pair<std::vector<Conversation>, FilterReport> filter_conversations(const std::vector<Conversation>& convs,
                                                                        const S& scorer,
                                                                        double threshold = kDefaultFilterThreshold) {
  FilterReport report;
  report.threshold = threshold;
  std::vector<Conversation> kept;
  for (const auto& c : convs) {
    ++report.total_conversations;
    if (keep_conversation(c, scorer, threshold, report)) {
      kept.push_back(c);
      ++report.retained;
    } else {
      ++report.dropped;
    }
  }
  return {std::move(kept), std::move(report)};
}

/// Streaming form: one conversation resident at a time.
template <UtteranceScorer S>
FilterReport filter_stream(std::istream& in, std::ostream& out, const S& scorer,
                           double threshold = kDefaultFilterThreshold) {
  FilterReport report;
  report.threshold = threshold;
  ConvReader reader(in);
  while (auto c = reader.next()) {
    ++report.total_conversations;
    if (keep_conversation(*c, scorer, threshold, report)) {
      write_conversation(out, *c);
      ++report.retained;
    } else {
      ++report.dropped;
    }
  }
  report.warnings = reader.warnings();
  return report;
}

/// Scores utterances with a relatedness model's predict_score.
class ModelScorer {
 public:
  explicit ModelScorer(const classifier::ClassifierModel& model) : model_(&model) {
    if (model.task_tag() != classifier::TaskTag::relatedness)
      throw ConfigurationError("corpus filtering needs a relatedness-tagged model");
  }
  double operator()(std::string_view u) const { return model_->predict_score(u).score; }

 private:
  const classifier::ClassifierModel* model_;
};

}  // namespace solace::corpus
