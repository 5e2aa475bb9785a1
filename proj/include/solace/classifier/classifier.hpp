#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "solace/classifier/metrics.hpp"
#include "solace/errors.hpp"
#include "solace/nn/activation.hpp"
#include "solace/nn/checkpoint.hpp"
#include "solace/nn/fit.hpp"
#include "solace/nn/loss.hpp"
#include "solace/nn/lstm.hpp"
#include "solace/text/dataset.hpp"
#include "solace/text/pipeline.hpp"

namespace solace::classifier {

using nn::Mat;
using nn::Vec;

enum class TaskTag { sentiment, relatedness };

inline std::string_view to_string(TaskTag t) { return t == TaskTag::sentiment ? "sentiment" : "relatedness"; }

inline TaskTag task_tag_from_string(std::string_view s) {
  if (s == "sentiment") return TaskTag::sentiment;
  if (s == "relatedness") return TaskTag::relatedness;
  throw ConfigurationError("unknown task tag '" + std::string(s) + "'");
}

struct ClassifierConfig {
  int bilstm_units = 32;  // per direction
  int lstm_units = 16;
  TaskTag task_tag = TaskTag::sentiment;
  double decision_threshold = 0.5;
  double pad_coverage = 0.95;
  nn::CellSquash activation = nn::CellSquash::sigmoid;
  bool train_embeddings = false;
  double init_scale = 0.05;
  double val_fraction = 0.1;  // held out when no validation set is given
  nn::TrainSchedule schedule{};

  void validate() const {
    if (bilstm_units < 1 || lstm_units < 1) throw ConfigurationError("classifier units must be >= 1");
    if (!(decision_threshold > 0 && decision_threshold < 1)) throw ConfigurationError("threshold must be in (0,1)");
    schedule.validate();
  }
};

/// Bi-LSTM over the full sequence, an LSTM over the concatenated states,
/// and a sigmoid head on the last hidden state of that LSTM.
struct ClassifierParams {
  nn::LstmCellParams fwd, bwd, top;
  Vec head_w;
  Vec head_b;     // size 1
  Mat embedding;  // (K+1) x dim when fine-tuned, otherwise empty

  static ClassifierParams init(Eigen::Index input_dim, int bilstm_units, int lstm_units, nn::Rng& rng, double scale) {
    ClassifierParams p;
    p.fwd = nn::LstmCellParams::uniform(input_dim, bilstm_units, rng, scale);
    p.bwd = nn::LstmCellParams::uniform(input_dim, bilstm_units, rng, scale);
    p.top = nn::LstmCellParams::uniform(2 * bilstm_units, lstm_units, rng, scale);
    p.head_w = Vec::Zero(lstm_units);
    nn::fill_uniform(p.head_w, rng, -scale, scale);
    p.head_b = Vec::Zero(1);
    return p;
  }

  template <class F>
  void visit(F&& f) {
    nn::visit_prefixed("bi.fwd", fwd, f);
    nn::visit_prefixed("bi.bwd", bwd, f);
    nn::visit_prefixed("top", top, f);
    f("head.w", head_w);
    f("head.b", head_b);
    if (embedding.size() > 0) f("embedding", embedding);
  }
};

/// A pre-padded index sequence with its label.
struct ClassifierExample {
  std::vector<std::int32_t> indices;
  int label = 0;
};

/// Differentiable classifier graph; satisfies nn::TrainingProblem.
class ClassifierNet {
 public:
  using Params = ClassifierParams;
  using Example = ClassifierExample;

  ClassifierNet(std::shared_ptr<const text::EmbeddingTable> table, nn::CellSquash activation)
      : table_(std::move(table)), activation_(activation) {}

  struct Trace {
    std::vector<Vec> xs;
    nn::LstmRun fwd, bwd, top;
    std::vector<Vec> concat;
    double logit = 0.0;
    double prob = 0.0;
  };

  Vec embed(const Params& p, std::int32_t idx) const {
    if (idx < 0 || static_cast<std::size_t>(idx) >= table_->rows())
      throw InvalidInput("token index " + std::to_string(idx) + " outside the embedding table");
    if (idx == 0) return Vec::Zero(table_->dim());
    if (p.embedding.size() > 0) return p.embedding.row(idx).transpose();
    return table_->matrix().row(idx).transpose();
  }

  Trace forward(const Params& p, std::span<const std::int32_t> indices, bool keep_cache) const {
    if (indices.empty()) throw InvalidInput("classifier forward: empty sequence");
    Trace tr;
    tr.xs.reserve(indices.size());
    for (auto idx : indices) tr.xs.push_back(embed(p, idx));
    const std::vector<Vec> reversed(tr.xs.rbegin(), tr.xs.rend());
    tr.fwd = nn::lstm_forward(p.fwd, tr.xs, nn::LstmState::zeros(p.fwd.hidden_dim()), activation_, keep_cache);
    tr.bwd = nn::lstm_forward(p.bwd, reversed, nn::LstmState::zeros(p.bwd.hidden_dim()), activation_, keep_cache);
    const std::size_t n = indices.size();
    tr.concat.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
      tr.concat[t].resize(p.fwd.hidden_dim() + p.bwd.hidden_dim());
      tr.concat[t] << tr.fwd.hidden[t], tr.bwd.hidden[n - 1 - t];
    }
    tr.top = nn::lstm_forward(p.top, tr.concat, nn::LstmState::zeros(p.top.hidden_dim()), activation_, keep_cache);
    tr.logit = p.head_w.dot(tr.top.final.h) + p.head_b(0);
    tr.prob = nn::sigmoid(tr.logit);
    return tr;
  }

  double probability(const Params& p, std::span<const std::int32_t> indices) const {
    return forward(p, indices, false).prob;
  }

  /// Adds d(weight * loss)/d(params) for one example into `grad`; returns the loss.
  double accumulate_gradient(const Params& p, const Example& ex, double weight, Params& grad) const {
    const Trace tr = forward(p, ex.indices, true);
    const double loss = nn::bce_term(tr.prob, ex.label);
    const double dz = weight * nn::bce_logit_grad(tr.prob, ex.label);
    grad.head_w += dz * tr.top.final.h;
    grad.head_b(0) += dz;
    const Vec dh_top = dz * p.head_w;
    const auto top_g = nn::lstm_backward(p.top, tr.top, activation_, {}, dh_top, Vec(), grad.top, true);

    const std::size_t n = ex.indices.size();
    const auto hf = p.fwd.hidden_dim();
    const auto hb = p.bwd.hidden_dim();
    std::vector<Vec> dh_fwd(n), dh_bwd(n);
    for (std::size_t t = 0; t < n; ++t) {
      dh_fwd[t] = top_g.dx[t].head(hf);
      dh_bwd[n - 1 - t] = top_g.dx[t].tail(hb);
    }
    const bool tune = p.embedding.size() > 0;
    const auto fg = nn::lstm_backward(p.fwd, tr.fwd, activation_, dh_fwd, Vec(), Vec(), grad.fwd, tune);
    const auto bg = nn::lstm_backward(p.bwd, tr.bwd, activation_, dh_bwd, Vec(), Vec(), grad.bwd, tune);
    if (tune) {
      for (std::size_t t = 0; t < n; ++t) {
        const auto idx = ex.indices[t];
        if (idx == 0) continue;  // pad row stays zero
        grad.embedding.row(idx) += (fg.dx[t] + bg.dx[n - 1 - t]).transpose();
      }
    }
    return loss;
  }

  double loss_and_gradient(const Params& p, std::span<const Example* const> batch, Params& grad) const {
    const double w = 1.0 / static_cast<double>(batch.size());
    double sum = 0.0;
    for (const Example* ex : batch) sum += accumulate_gradient(p, *ex, w, grad);
    return sum * w;
  }

  double loss(const Params& p, std::span<const Example* const> batch) const {
    double sum = 0.0;
    for (const Example* ex : batch) sum += nn::bce_term(probability(p, ex->indices), ex->label);
    return sum / static_cast<double>(batch.size());
  }

  nn::CellSquash activation() const { return activation_; }
  const text::EmbeddingTable& table() const { return *table_; }

 private:
  std::shared_ptr<const text::EmbeddingTable> table_;
  nn::CellSquash activation_;
};

struct ScoreResult {
  double score = 0.0;
  bool empty_after_clean = false;  // scored on the all-pad sequence
};

/// A trained, immutable classifier bound to its embedding table.
class ClassifierModel {
 public:
  ClassifierModel(ClassifierConfig cfg, ClassifierParams params, std::size_t pad_length,
                  std::shared_ptr<const text::EmbeddingTable> table)
      : cfg_(std::move(cfg)),
        params_(std::move(params)),
        pad_length_(pad_length),
        pipeline_(table),
        net_(table, cfg_.activation) {
    if (pad_length_ < 1) throw ConfigurationError("pad length must be >= 1");
  }

  ScoreResult predict_score(std::string_view text) const {
    const auto enc = pipeline_.encode(text);
    const auto padded = text::pad_truncate(enc.seq, pad_length_);
    return {net_.probability(params_, padded.indices), enc.empty_after_clean};
  }

  int predict_label(std::string_view text) const { return label_for(predict_score(text).score); }
  int label_for(double score) const { return score >= cfg_.decision_threshold ? 1 : 0; }

  EvalReport evaluate(std::span<const text::LabeledText> test) const {
    if (test.empty()) throw InvalidInput("evaluate: empty test set");
    std::vector<int> truth, pred;
    for (const auto& row : test) {
      truth.push_back(row.label);
      pred.push_back(predict_label(row.text));
    }
    return confusion_report(truth, pred);
  }

  ClassifierExample make_example(std::string_view text, int label) const {
    return {text::pad_truncate(pipeline_.encode(text).seq, pad_length_).indices, label};
  }

  const ClassifierConfig& config() const { return cfg_; }
  const ClassifierParams& params() const { return params_; }
  std::size_t pad_length() const { return pad_length_; }
  double threshold() const { return cfg_.decision_threshold; }
  TaskTag task_tag() const { return cfg_.task_tag; }
  const ClassifierNet& net() const { return net_; }
  const text::TextPipeline& pipeline() const { return pipeline_; }

  nlohmann::json to_json() const {
    nn::CheckpointMeta meta{net_.table().dim(), {cfg_.bilstm_units, cfg_.lstm_units}, cfg_.activation};
    auto j = nn::make_checkpoint(params_, meta);
    j["model_kind"] = "classifier";
    j["task_tag"] = std::string(to_string(cfg_.task_tag));
    j["pad_length"] = pad_length_;
    j["threshold"] = cfg_.decision_threshold;
    j["vocab_fingerprint"] = net_.table().fingerprint();
    j["vocab_size"] = net_.table().size();
    j["train_embeddings"] = params_.embedding.size() > 0;
    return j;
  }

  static ClassifierModel from_json(const nlohmann::json& j, std::shared_ptr<const text::EmbeddingTable> table) {
    if (j.value("model_kind", "") != "classifier") throw ParseError(0, "not a classifier model file");
    const auto meta = nn::read_checkpoint_meta(j);
    if (meta.hidden_dims.size() != 2) throw ParseError(0, "classifier needs two hidden_dims");
    if (meta.input_dim != table->dim()) throw ConfigurationError("embedding dimension differs from the model's");
    if (j.at("vocab_fingerprint").get<std::string>() != table->fingerprint())
      throw ConfigurationError("embedding table does not match the one the model was trained with");
    ClassifierConfig cfg;
    cfg.bilstm_units = static_cast<int>(meta.hidden_dims[0]);
    cfg.lstm_units = static_cast<int>(meta.hidden_dims[1]);
    cfg.activation = meta.activation;
    cfg.task_tag = task_tag_from_string(j.at("task_tag").get<std::string>());
    cfg.decision_threshold = j.at("threshold").get<double>();
    cfg.train_embeddings = j.value("train_embeddings", false);
    nn::Rng rng(0);
    auto params = ClassifierParams::init(meta.input_dim, cfg.bilstm_units, cfg.lstm_units, rng, 0.0);
    if (cfg.train_embeddings) params.embedding = Mat::Zero(static_cast<Eigen::Index>(table->rows()), table->dim());
    nn::tensors_from_json(j.at("tensors"), params);
    return ClassifierModel(cfg, std::move(params), j.at("pad_length").get<std::size_t>(), std::move(table));
  }

  void save(const std::filesystem::path& path) const { nn::write_json_file(path, to_json()); }

  static ClassifierModel load(const std::filesystem::path& path, std::shared_ptr<const text::EmbeddingTable> table) {
    return from_json(nn::read_json_file(path), std::move(table));
  }

 private:
  ClassifierConfig cfg_;
  ClassifierParams params_;
  std::size_t pad_length_;
  text::TextPipeline pipeline_;
  ClassifierNet net_;
};

struct TrainedClassifier {
  ClassifierModel model;
  nn::TrainHistory history;
};

/// Splits off the last `fraction` of a seeded shuffle as validation data.
inline std::pair<std::vector<text::LabeledText>, std::vector<text::LabeledText>> split_train_val(
    std::vector<text::LabeledText> rows, double fraction, std::uint64_t seed) {
  nn::Rng rng(seed);
  std::shuffle(rows.begin(), rows.end(), rng);
  const auto n_val = static_cast<std::size_t>(static_cast<double>(rows.size()) * fraction);
  std::vector<text::LabeledText> val(rows.end() - static_cast<std::ptrdiff_t>(n_val), rows.end());
  rows.resize(rows.size() - n_val);
  return {std::move(rows), std::move(val)};
}

/// clean -> segment -> index -> pad -> fit with binary cross entropy.
inline TrainedClassifier train_classifier(std::vector<text::LabeledText> train, std::vector<text::LabeledText> val,
                                          const ClassifierConfig& cfg,
                                          std::shared_ptr<const text::EmbeddingTable> table,
                                          const nn::FitOptions<ClassifierParams>& options = {}) {
  cfg.validate();
  if (!table) throw ConfigurationError("train_classifier needs an embedding table");
  if (val.empty() && cfg.val_fraction > 0) std::tie(train, val) = split_train_val(std::move(train), cfg.val_fraction, cfg.schedule.rng_seed);
  if (train.empty()) throw InvalidInput("train_classifier: empty training set");
  const bool has_pos = std::any_of(train.begin(), train.end(), [](const auto& r) { return r.label == 1; });
  const bool has_neg = std::any_of(train.begin(), train.end(), [](const auto& r) { return r.label == 0; });
  if (!has_pos || !has_neg) throw InvalidInput("train_classifier: training set must contain both labels");

  const text::TextPipeline pipeline(table);
  std::vector<text::IndexedSeq> encoded;
  encoded.reserve(train.size());
  for (const auto& row : train) encoded.push_back(pipeline.encode(row.text).seq);
  const std::size_t pad_length = std::max<std::size_t>(1, text::compute_pad_length(encoded, cfg.pad_coverage));

  std::vector<ClassifierExample> train_ex, val_ex;
  for (std::size_t k = 0; k < train.size(); ++k)
    train_ex.push_back({text::pad_truncate(encoded[k], pad_length).indices, train[k].label});
  for (const auto& row : val)
    val_ex.push_back({text::pad_truncate(pipeline.encode(row.text).seq, pad_length).indices, row.label});

  nn::Rng rng(cfg.schedule.rng_seed);
  auto params = ClassifierParams::init(table->dim(), cfg.bilstm_units, cfg.lstm_units, rng, cfg.init_scale);
  if (cfg.train_embeddings) params.embedding = table->matrix();

  auto opts = options;
  if (!opts.checkpoint_dir.empty() && !opts.checkpoint_writer)
    opts.checkpoint_writer = [&](const ClassifierParams& p) { return ClassifierModel(cfg, p, pad_length, table).to_json(); };

  const ClassifierNet net(table, cfg.activation);
  auto result = nn::fit(net, std::move(params), std::span<const ClassifierExample>(train_ex),
                        std::span<const ClassifierExample>(val_ex), cfg.schedule, opts);
  return {ClassifierModel(cfg, std::move(result.params), pad_length, table), std::move(result.history)};
}

}  // namespace solace::classifier
