#pragma once

#include <algorithm>
#include <memory>
#include <string>
#include <vector>

#include "solace/corpus/conv.hpp"
#include "solace/errors.hpp"
#include "solace/nn/fit.hpp"
#include "solace/responder/seq2seq.hpp"
#include "solace/text/pipeline.hpp"

namespace solace::responder {

struct QaPair {
  std::string question;
  std::string answer;
};

/// Non-overlapping consecutive utterance pairs (u0, u1), (u2, u3), ... of
/// each conversation. A trailing odd utterance has no answer and is unused.
inline std::vector<QaPair> qa_pairs(const std::vector<corpus::Conversation>& convs) {
  std::vector<QaPair> out;
  for (const auto& c : convs)
    for (std::size_t k = 0; k + 1 < c.utterances.size(); k += 2) out.push_back({c.utterances[k], c.utterances[k + 1]});
  return out;
}

/// Target-side ids: OOV tokens are dropped because PAD is never emitted.
inline Tokens target_tokens(const text::TextPipeline& pipeline, std::string_view text) {
  Tokens out;
  for (auto t : pipeline.encode(text).seq.indices)
    if (t != kPad) out.push_back(t);
  return out;
}

struct EncodedPairs {
  std::vector<Seq2SeqExample> examples;
  std::size_t skipped = 0;  // a side was empty after encoding
};

inline EncodedPairs encode_pairs(const text::TextPipeline& pipeline, const std::vector<QaPair>& pairs) {
  EncodedPairs out;
  for (const auto& p : pairs) {
    Seq2SeqExample ex{pipeline.encode(p.question).seq.indices, target_tokens(pipeline, p.answer)};
    if (ex.source.empty() || ex.target.empty()) {
      ++out.skipped;
      continue;
    }
    out.examples.push_back(std::move(ex));
  }
  return out;
}

template <class T>
std::pair<std::vector<T>, std::vector<T>> split_examples(std::vector<T> rows, double fraction, std::uint64_t seed) {
  nn::Rng rng(seed);
  std::shuffle(rows.begin(), rows.end(), rng);
  const auto n_val = static_cast<std::size_t>(static_cast<double>(rows.size()) * fraction);
  std::vector<T> val(rows.end() - static_cast<std::ptrdiff_t>(n_val), rows.end());
  rows.resize(rows.size() - n_val);
  return {std::move(rows), std::move(val)};
}

struct TrainedSeq2Seq {
  Seq2SeqModel model;
  nn::TrainHistory history;
  std::size_t skipped_pairs = 0;
};

struct TrainedLanguageModel {
  LanguageModel model;
  nn::TrainHistory history;
  std::size_t skipped = 0;
};

/// Trains on already-indexed examples. An empty `val` is split off `train`
/// when cfg.val_fraction > 0.
inline TrainedSeq2Seq train_seq2seq(std::vector<Seq2SeqExample> train, std::vector<Seq2SeqExample> val,
                                    const Seq2SeqConfig& cfg, std::shared_ptr<const text::EmbeddingTable> table,
                                    const nn::FitOptions<Seq2SeqParams>& options = {}) {
  cfg.validate();
  if (!table) throw ConfigurationError("train_seq2seq needs an embedding table");
  if (train.empty()) throw InvalidInput("train_seq2seq: empty corpus");
  if (val.empty() && cfg.val_fraction > 0 && train.size() > 1)
    std::tie(train, val) = split_examples(std::move(train), cfg.val_fraction, cfg.schedule.rng_seed);

  nn::Rng rng(cfg.schedule.rng_seed);
  auto params = Seq2SeqModel::init_params(cfg, *table, rng);
  auto opts = options;
  if (!opts.checkpoint_dir.empty() && !opts.checkpoint_writer)
    opts.checkpoint_writer = [&](const Seq2SeqParams& p) { return Seq2SeqModel(cfg, p, table).to_json(); };

  const Seq2SeqNet net(table, cfg.activation);
  auto result = nn::fit(net, std::move(params), std::span<const Seq2SeqExample>(train),
                        std::span<const Seq2SeqExample>(val), cfg.schedule, opts);
  return {Seq2SeqModel(cfg, std::move(result.params), table), std::move(result.history), 0};
}

inline TrainedSeq2Seq train_seq2seq(const std::vector<QaPair>& pairs, const Seq2SeqConfig& cfg,
                                    std::shared_ptr<const text::EmbeddingTable> table,
                                    const nn::FitOptions<Seq2SeqParams>& options = {}) {
  if (!table) throw ConfigurationError("train_seq2seq needs an embedding table");
  auto encoded = encode_pairs(text::TextPipeline(table), pairs);
  if (encoded.examples.empty()) throw InvalidInput("train_seq2seq: empty corpus after encoding");
  auto out = train_seq2seq(std::move(encoded.examples), {}, cfg, std::move(table), options);
  out.skipped_pairs = encoded.skipped;
  return out;
}

inline TrainedLanguageModel train_language_model(std::vector<LmExample> train, std::vector<LmExample> val,
                                                 const Seq2SeqConfig& cfg,
                                                 std::shared_ptr<const text::EmbeddingTable> table,
                                                 const nn::FitOptions<TargetParams>& options = {}) {
  cfg.validate();
  if (!table) throw ConfigurationError("train_language_model needs an embedding table");
  if (train.empty()) throw InvalidInput("train_language_model: empty corpus");
  if (val.empty() && cfg.val_fraction > 0 && train.size() > 1)
    std::tie(train, val) = split_examples(std::move(train), cfg.val_fraction, cfg.schedule.rng_seed);

  nn::Rng rng(cfg.schedule.rng_seed);
  auto params = LanguageModel::init_params(cfg, *table, rng);
  auto opts = options;
  if (!opts.checkpoint_dir.empty() && !opts.checkpoint_writer)
    opts.checkpoint_writer = [&](const TargetParams& p) { return LanguageModel(cfg, p, table).to_json(); };

  const LanguageModelNet net(table, cfg.activation);
  auto result = nn::fit(net, std::move(params), std::span<const LmExample>(train), std::span<const LmExample>(val),
                        cfg.schedule, opts);
  return {LanguageModel(cfg, std::move(result.params), table), std::move(result.history), 0};
}

inline TrainedLanguageModel train_language_model(const std::vector<std::string>& sentences, const Seq2SeqConfig& cfg,
                                                 std::shared_ptr<const text::EmbeddingTable> table,
                                                 const nn::FitOptions<TargetParams>& options = {}) {
  if (!table) throw ConfigurationError("train_language_model needs an embedding table");
  const text::TextPipeline pipeline(table);
  std::vector<LmExample> examples;
  std::size_t skipped = 0;
  for (const auto& s : sentences) {
    auto toks = target_tokens(pipeline, s);
    if (toks.empty()) {
      ++skipped;
      continue;
    }
    examples.push_back({std::move(toks)});
  }
  if (examples.empty()) throw InvalidInput("train_language_model: empty corpus after encoding");
  auto out = train_language_model(std::move(examples), {}, cfg, std::move(table), options);
  out.skipped = skipped;
  return out;
}

}  // namespace solace::responder
