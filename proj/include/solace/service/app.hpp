#pragma once

// Deployment settings and the model loading that turns them into a live
// DialogueManager. Every model is checked against the slot it fills.

#include <chrono>
#include <filesystem>
#include <memory>
#include <string>

#include "solace/classifier/classifier.hpp"
#include "solace/dialogue/knowledge.hpp"
#include "solace/dialogue/manager.hpp"
#include "solace/errors.hpp"
#include "solace/responder/beam.hpp"
#include "solace/responder/seq2seq.hpp"
#include "solace/text/embedding.hpp"

namespace solace::service {

struct ServiceConfig {
  std::filesystem::path embeddings;
  std::size_t vocab_cap = text::kDefaultVocabularyCap;
  std::filesystem::path mental_model;     // relatedness classifier
  std::filesystem::path sentiment_model;  // sentiment classifier
  std::filesystem::path casual_model;
  std::filesystem::path casual_lm;  // empty: no MMI term
  std::filesystem::path counseling_model;
  std::filesystem::path counseling_lm;
  std::filesystem::path knowledge;    // NDJSON store; empty keeps records in memory
  std::filesystem::path session_dir;  // empty keeps sessions in memory
  dialogue::TrendConfig trend;
  responder::DecodeConfig decode;
  double idle_expiry_hours = 24.0;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path web_root;

  void validate() const {
    for (const auto& [name, p] : {std::pair{"embeddings", &embeddings}, {"mental_model", &mental_model},
                                  {"sentiment_model", &sentiment_model}, {"casual_model", &casual_model},
                                  {"counseling_model", &counseling_model}})
      if (p->empty()) throw ConfigurationError(std::string("missing setting '") + name + "'");
    trend.validate();
    decode.validate();
    if (!(idle_expiry_hours > 0)) throw ConfigurationError("idle_expiry_hours must be positive");
    if (port < 0 || port > 65535) throw ConfigurationError("port must be in [0, 65535]");
  }
};

inline std::shared_ptr<const classifier::ClassifierModel> load_classifier(
    const std::filesystem::path& path, classifier::TaskTag want, std::shared_ptr<const text::EmbeddingTable> table) {
  auto m = std::make_shared<const classifier::ClassifierModel>(classifier::ClassifierModel::load(path, std::move(table)));
  if (m->task_tag() != want)
    throw ConfigurationError("'" + path.string() + "' is a " + std::string(classifier::to_string(m->task_tag())) +
                             " classifier, expected " + std::string(classifier::to_string(want)));
  return m;
}

inline std::shared_ptr<const dialogue::ReplyGenerator> load_generator(const std::filesystem::path& model,
                                                                      const std::filesystem::path& lm,
                                                                      responder::Role want,
                                                                      const responder::DecodeConfig& decode,
                                                                      std::shared_ptr<const text::EmbeddingTable> table) {
  auto s2s = std::make_shared<const responder::Seq2SeqModel>(responder::Seq2SeqModel::load(model, table));
  if (s2s->config().role != want)
    throw ConfigurationError("'" + model.string() + "' serves the " + std::string(responder::to_string(s2s->config().role)) +
                             " role, expected " + std::string(responder::to_string(want)));
  std::shared_ptr<const responder::LanguageModel> language;
  if (!lm.empty()) language = std::make_shared<const responder::LanguageModel>(responder::LanguageModel::load(lm, table));
  return std::make_shared<dialogue::Seq2SeqGenerator>(std::move(s2s), std::move(language), decode);
}

inline dialogue::ModelBundle load_bundle(const ServiceConfig& cfg) {
  cfg.validate();
  auto table = std::make_shared<const text::EmbeddingTable>(text::load_embeddings(cfg.embeddings, cfg.vocab_cap));
  return {std::make_shared<dialogue::ClassifierScorer>(load_classifier(cfg.mental_model, classifier::TaskTag::relatedness, table)),
          std::make_shared<dialogue::ClassifierScorer>(load_classifier(cfg.sentiment_model, classifier::TaskTag::sentiment, table)),
          load_generator(cfg.casual_model, cfg.casual_lm, responder::Role::casual, cfg.decode, table),
          load_generator(cfg.counseling_model, cfg.counseling_lm, responder::Role::counseling, cfg.decode, table)};
}

inline std::shared_ptr<dialogue::KnowledgeSink> open_store(const ServiceConfig& cfg) {
  if (cfg.knowledge.empty()) return std::make_shared<dialogue::MemoryKnowledgeStore>();
  return std::make_shared<dialogue::FileKnowledgeStore>(cfg.knowledge);
}

inline dialogue::DialogueConfig dialogue_config(const ServiceConfig& cfg) {
  dialogue::DialogueConfig d;
  d.trend = cfg.trend;
  d.idle_expiry = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::duration<double, std::ratio<3600>>(cfg.idle_expiry_hours));
  d.session_dir = cfg.session_dir;
  d.fallback_text = cfg.decode.fallback_text;
  return d;
}

}  // namespace solace::service
