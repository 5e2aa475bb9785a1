#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "solace/errors.hpp"
#include "solace/text/clean.hpp"
#include "solace/text/embedding.hpp"
#include "solace/text/segment.hpp"
#include "solace/text/sequence.hpp"

namespace solace::text {

/// Result of encoding raw text. `empty_after_clean` marks inputs that had
/// nothing left once cleansing removed non-ideograph characters.
struct Encoded {
  IndexedSeq seq;
  std::vector<std::string> tokens;
  bool empty_after_clean = false;
};

/// clean -> segment -> index, sharing one embedding table.
class TextPipeline {
 public:
  explicit TextPipeline(std::shared_ptr<const EmbeddingTable> table, CleanProfile profile = CleanProfile::cjk)
      : table_(std::move(table)), profile_(profile) {
    if (!table_) throw ConfigurationError("TextPipeline needs an embedding table");
    segmenter_ = std::make_shared<GreedySegmenter>(Lexicon(table_->vocabulary()));
  }

  TextPipeline(std::shared_ptr<const EmbeddingTable> table, std::shared_ptr<const Segmenter> segmenter,
               CleanProfile profile = CleanProfile::cjk)
      : table_(std::move(table)), segmenter_(std::move(segmenter)), profile_(profile) {
    if (!table_ || !segmenter_) throw ConfigurationError("TextPipeline needs a table and a segmenter");
  }

  Encoded encode(std::string_view raw) const {
    Encoded out;
    const std::string cleaned = clean_text(raw, profile_);
    out.tokens = segmenter_->segment(cleaned);
    out.seq = tokens_to_indices(out.tokens, *table_, std::string(raw));
    out.empty_after_clean = out.seq.indices.empty();
    return out;
  }

  const EmbeddingTable& table() const { return *table_; }
  std::shared_ptr<const EmbeddingTable> table_ptr() const { return table_; }
  CleanProfile profile() const { return profile_; }

 private:
  std::shared_ptr<const EmbeddingTable> table_;
  std::shared_ptr<const Segmenter> segmenter_;
  CleanProfile profile_;
};

}  // namespace solace::text
