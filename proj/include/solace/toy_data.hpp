#pragma once

// Small synthetic corpora for smoke tests, demos and the acceptance suite.

#include <algorithm>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "solace/text/dataset.hpp"
#include "solace/text/embedding.hpp"
#include "solace/text/utf8.hpp"

namespace solace::toy {

/// `n` distinct single-ideograph words starting at U+4E00 + offset.
inline std::vector<std::string> ideographs(std::size_t n, std::size_t offset = 0) {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < n; ++k) {
    std::string s;
    text::utf8_append(s, static_cast<char32_t>(0x4E00 + offset + k));
    out.push_back(std::move(s));
  }
  return out;
}

inline std::shared_ptr<text::EmbeddingTable> random_table(const std::vector<std::string>& words, Eigen::Index dim,
                                                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  auto t = std::make_shared<text::EmbeddingTable>(dim);
  Eigen::VectorXd v(dim);
  for (const auto& w : words) {
    for (Eigen::Index k = 0; k < dim; ++k) v(k) = d(rng);
    t->add(w, v);
  }
  return t;
}

/// Label 1 iff `marker` occurs. Filler words never include the marker.
inline std::vector<text::LabeledText> marker_dataset(const std::vector<std::string>& filler, const std::string& marker,
                                                     std::size_t n, std::uint64_t seed, std::size_t min_len = 3,
                                                     std::size_t max_len = 10) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, filler.size() - 1);
  std::vector<text::LabeledText> out;
  for (std::size_t k = 0; k < n; ++k) {
    const int label = static_cast<int>(k % 2);
    std::vector<std::string> toks(len(rng));
    for (auto& t : toks) t = filler[pick(rng)];
    if (label == 1) toks[std::uniform_int_distribution<std::size_t>(0, toks.size() - 1)(rng)] = marker;
    std::string s;
    for (const auto& t : toks) s += t;
    out.push_back({label, std::move(s)});
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

/// Random token sequences of length 1..max_len over `words`.
inline std::vector<std::vector<std::string>> random_sequences(const std::vector<std::string>& words, std::size_t n,
                                                              std::size_t max_len, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> len(1, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
  std::vector<std::vector<std::string>> out(n);
  for (auto& s : out) {
    s.resize(len(rng));
    for (auto& t : s) t = words[pick(rng)];
  }
  return out;
}

}  // namespace solace::toy
