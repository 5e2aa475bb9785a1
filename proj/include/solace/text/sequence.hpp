#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "solace/errors.hpp"
#include "solace/text/embedding.hpp"

namespace solace::text {

struct IndexedSeq {
  std::vector<std::int32_t> indices;
  std::string source_text;

  std::size_t size() const { return indices.size(); }
};

/// Out-of-vocabulary tokens map to index 0, the pad/unknown row.
inline IndexedSeq tokens_to_indices(std::span<const std::string> tokens, const EmbeddingTable& table,
                                    std::string source_text = {}) {
  IndexedSeq seq;
  seq.source_text = std::move(source_text);
  seq.indices.reserve(tokens.size());
  for (const auto& tok : tokens) seq.indices.push_back(table.find(tok).value_or(0));
  return seq;
}

/// Smallest L such that at least `coverage` of the sequences have length <= L.
inline std::size_t compute_pad_length(std::span<const std::size_t> lengths, double coverage = 0.95) {
  if (lengths.empty()) throw InvalidInput("compute_pad_length: empty dataset");
  if (!(coverage > 0.0 && coverage <= 1.0)) throw InvalidInput("compute_pad_length: coverage must be in (0, 1]");
  std::vector<std::size_t> sorted(lengths.begin(), lengths.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    // Only candidate values are actual lengths; take the last index of a run.
    if (k + 1 < sorted.size() && sorted[k + 1] == sorted[k]) continue;
    if (static_cast<double>(k + 1) / n >= coverage) return sorted[k];
  }
  return sorted.back();
}

inline std::size_t compute_pad_length(std::span<const IndexedSeq> dataset, double coverage = 0.95) {
  std::vector<std::size_t> lengths;
  lengths.reserve(dataset.size());
  for (const auto& s : dataset) lengths.push_back(s.size());
  return compute_pad_length(std::span<const std::size_t>(lengths), coverage);
}

/// Pre-pads with zeros or keeps the last `length` indices.
inline IndexedSeq pad_truncate(const IndexedSeq& seq, std::size_t length) {
  if (length < 1) throw InvalidInput("pad_truncate: length must be >= 1");
  IndexedSeq out;
  out.source_text = seq.source_text;
  if (seq.size() >= length) {
    out.indices.assign(seq.indices.end() - static_cast<std::ptrdiff_t>(length), seq.indices.end());
  } else {
    out.indices.assign(length - seq.size(), 0);
    out.indices.insert(out.indices.end(), seq.indices.begin(), seq.indices.end());
  }
  return out;
}

}  // namespace solace::text
