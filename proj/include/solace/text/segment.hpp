#pragma once

#include <algorithm>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "solace/text/utf8.hpp"

namespace solace::text {

class Lexicon {
 public:
  Lexicon() = default;

  template <class Range>
  explicit Lexicon(const Range& words) {
    for (const auto& w : words) insert(w);
  }

  void insert(std::string_view word) {
    auto cps = utf8_decode(word);
    if (cps.empty()) return;
    max_len_ = std::max(max_len_, cps.size());
    words_.insert(std::move(cps));
  }

  bool contains(std::u32string_view w) const { return words_.count(std::u32string(w)) > 0; }
  std::size_t max_length() const { return max_len_; }
  std::size_t size() const { return words_.size(); }

 private:
  std::unordered_set<std::u32string> words_;
  std::size_t max_len_ = 0;
};

/// Pluggable word segmenter.
class Segmenter {
 public:
  virtual ~Segmenter() = default;
  virtual std::vector<std::string> segment(std::string_view text) const = 0;
};

/// Left-to-right greedy longest match. Positions where no lexicon word
/// starts emit a single character.
inline std::vector<std::string> segment(std::string_view text, const Lexicon& lexicon) {
  const std::u32string cps = utf8_decode(text);
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < cps.size()) {
    std::size_t take = 1;
    const std::size_t longest = std::min(lexicon.max_length(), cps.size() - pos);
    for (std::size_t len = longest; len >= 1; --len) {
      if (lexicon.contains(std::u32string_view(cps).substr(pos, len))) {
        take = len;
        break;
      }
    }
    out.push_back(utf8_encode(std::u32string_view(cps).substr(pos, take)));
    pos += take;
  }
  return out;
}

class GreedySegmenter final : public Segmenter {
 public:
  explicit GreedySegmenter(Lexicon lexicon) : lexicon_(std::move(lexicon)) {}

  std::vector<std::string> segment(std::string_view text) const override { return text::segment(text, lexicon_); }
  const Lexicon& lexicon() const { return lexicon_; }

 private:
  Lexicon lexicon_;
};

}  // namespace solace::text
