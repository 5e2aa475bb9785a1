#pragma once

// Encoder-decoder responder and the target-side language model.
//
// Token ids: 0 = PAD (also OOV on the source side), 1..K = words of the
// embedding table, K+1 = EOS, K+2 = BOS. The output softmax always gives
// PAD probability 0.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "solace/errors.hpp"
#include "solace/nn/activation.hpp"
#include "solace/nn/checkpoint.hpp"
#include "solace/nn/fit.hpp"
#include "solace/nn/lstm.hpp"
#include "solace/nn/params.hpp"
#include "solace/text/embedding.hpp"
#include "solace/text/pipeline.hpp"

namespace solace::responder {

using nn::Mat;
using nn::Vec;
using TokenId = std::int32_t;
using Tokens = std::vector<TokenId>;

inline constexpr TokenId kPad = 0;

/// Id layout derived from the word count K of an embedding table.
struct TokenSpace {
  std::size_t words = 0;

  TokenId eos() const { return static_cast<TokenId>(words + 1); }
  TokenId bos() const { return static_cast<TokenId>(words + 2); }
  std::size_t size() const { return words + 3; }
  bool is_word(TokenId t) const { return t >= 1 && static_cast<std::size_t>(t) <= words; }
  bool valid(TokenId t) const { return t >= 0 && static_cast<std::size_t>(t) < size(); }
};

enum class Role { casual, counseling, lm };

inline std::string_view to_string(Role r) {
  switch (r) {
    case Role::casual: return "casual";
    case Role::counseling: return "counseling";
    case Role::lm: return "lm";
  }
  return "casual";
}

inline Role role_from_string(std::string_view s) {
  if (s == "casual") return Role::casual;
  if (s == "counseling") return Role::counseling;
  if (s == "lm") return Role::lm;
  throw ConfigurationError("unknown responder role '" + std::string(s) + "'");
}

struct Seq2SeqConfig {
  Role role = Role::casual;  // lm for language models, otherwise the bot served
  int hidden_units = 64;
  nn::CellSquash activation = nn::CellSquash::sigmoid;
  bool train_embeddings = false;  // word rows; EOS/BOS rows are always trained
  double init_scale = 0.05;
  double val_fraction = 0.1;
  nn::TrainSchedule schedule;

  void validate() const {
    if (hidden_units < 1) throw ConfigurationError("hidden_units must be positive");
    if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw ConfigurationError("val_fraction must be in [0, 1)");
    schedule.validate();
  }
};

/// Everything on the generating side: decoder cell, EOS/BOS embeddings,
/// output projection and, when tuned, the word embedding rows.
struct TargetParams {
  nn::LstmCellParams decoder;
  Mat specials;      // 2 x dim: EOS, BOS
  Mat projection;    // hidden x vocab
  Vec projection_b;  // vocab
  Mat embedding;     // (K+1) x dim when tuned, otherwise empty

  static TargetParams init(Eigen::Index dim, int hidden, std::size_t vocab, nn::Rng& rng, double scale) {
    TargetParams p;
    p.decoder = nn::LstmCellParams::uniform(dim, hidden, rng, scale);
    p.specials = Mat::Zero(2, dim);
    nn::fill_uniform(p.specials, rng, -scale, scale);
    p.projection = Mat::Zero(hidden, static_cast<Eigen::Index>(vocab));
    nn::fill_uniform(p.projection, rng, -scale, scale);
    p.projection_b = Vec::Zero(static_cast<Eigen::Index>(vocab));
    return p;
  }

  template <class F>
  void visit(F&& f) {
    nn::visit_prefixed("decoder", decoder, f);
    f("specials", specials);
    f("projection.w", projection);
    f("projection.b", projection_b);
    if (embedding.size() > 0) f("embedding", embedding);
  }
};

struct Seq2SeqParams {
  nn::LstmCellParams encoder;
  TargetParams target;

  template <class F>
  void visit(F&& f) {
    nn::visit_prefixed("encoder", encoder, f);
    target.visit(f);
  }
};

/// Id -> input vector lookup shared by encoder, decoder and LM.
class Embedder {
 public:
  explicit Embedder(std::shared_ptr<const text::EmbeddingTable> table) : table_(std::move(table)) {
    if (!table_) throw ConfigurationError("responder needs an embedding table");
    space_.words = table_->size();
  }

  Vec operator()(const TargetParams& p, TokenId t) const {
    if (!space_.valid(t)) throw InvalidInput("token id " + std::to_string(t) + " outside the vocabulary");
    if (t == kPad) return Vec::Zero(table_->dim());
    if (t == space_.eos()) return p.specials.row(0).transpose();
    if (t == space_.bos()) return p.specials.row(1).transpose();
    if (p.embedding.size() > 0) return p.embedding.row(t).transpose();
    return table_->matrix().row(t).transpose();
  }

  /// Adds an input-vector gradient to whichever row produced it.
  void accumulate(TargetParams& grad, TokenId t, const Vec& dx) const {
    if (t == space_.eos()) {
      grad.specials.row(0) += dx.transpose();
    } else if (t == space_.bos()) {
      grad.specials.row(1) += dx.transpose();
    } else if (t != kPad && grad.embedding.size() > 0) {
      grad.embedding.row(t) += dx.transpose();
    }
  }

  const TokenSpace& space() const { return space_; }
  const text::EmbeddingTable& table() const { return *table_; }
  const std::shared_ptr<const text::EmbeddingTable>& table_ptr() const { return table_; }

 private:
  std::shared_ptr<const text::EmbeddingTable> table_;
  TokenSpace space_;
};

/// Softmax over projection logits with PAD forced to probability 0.
inline Vec output_distribution(const TargetParams& p, const Vec& h) {
  Vec logits = p.projection.transpose() * h + p.projection_b;
  logits(kPad) = -std::numeric_limits<double>::infinity();
  const double m = logits.maxCoeff();
  Vec e = (logits.array() - m).unaryExpr([](double v) { return std::exp(v); });  // Eigen clamps exp below -709
  e(kPad) = 0.0;
  return e / e.sum();
}

struct StepResult {
  Vec distribution;
  nn::LstmState state;
};

inline StepResult target_step(const Embedder& emb, const TargetParams& p, nn::CellSquash squash,
                              const nn::LstmState& state, TokenId prev) {
  StepResult r;
  r.state = nn::lstm_cell_step(emb(p, prev), state, p.decoder, squash);
  r.distribution = output_distribution(p, r.state.h);
  return r;
}

/// Teacher-forced negative log-likelihood of `gold` followed by EOS,
/// starting from `init` with BOS as the first input. Adds weight * dNLL into
/// `grad` and returns the unweighted NLL. `dinit` receives the gradient with
/// respect to `init` when non-null.
inline double teacher_forced_nll(const Embedder& emb, const TargetParams& p, nn::CellSquash squash,
                                 const nn::LstmState& init, std::span<const TokenId> gold, double weight,
                                 TargetParams* grad, nn::LstmState* dinit) {
  const auto& space = emb.space();
  const std::size_t n = gold.size() + 1;
  Tokens inputs, targets;
  inputs.reserve(n);
  targets.reserve(n);
  inputs.push_back(space.bos());
  for (auto t : gold) {
    if (!space.is_word(t)) throw InvalidInput("target token " + std::to_string(t) + " is not a word id");
    inputs.push_back(t);
    targets.push_back(t);
  }
  targets.push_back(space.eos());

  std::vector<Vec> xs;
  xs.reserve(n);
  for (auto t : inputs) xs.push_back(emb(p, t));
  const auto run = nn::lstm_forward(p.decoder, xs, init, squash, grad != nullptr);

  double nll = 0.0;
  std::vector<Vec> dh(grad ? n : 0);
  for (std::size_t k = 0; k < n; ++k) {
    Vec dist = output_distribution(p, run.hidden[k]);
    nll -= std::log(dist(targets[k]));
    if (!grad) continue;
    dist(targets[k]) -= 1.0;
    dist *= weight;
    grad->projection.noalias() += run.hidden[k] * dist.transpose();
    grad->projection_b += dist;
    dh[k] = p.projection * dist;
  }
  if (!grad) return nll;

  const auto g = nn::lstm_backward(p.decoder, run, squash, dh, Vec(), Vec(), grad->decoder, true);
  for (std::size_t k = 0; k < n; ++k) emb.accumulate(*grad, inputs[k], g.dx[k]);
  if (dinit) *dinit = g.dinit;
  return nll;
}

struct Seq2SeqExample {
  Tokens source;  // unpadded; may contain 0 for OOV
  Tokens target;  // word ids only, EOS implied
};

/// Differentiable encoder-decoder; satisfies nn::TrainingProblem. Batch loss
/// is the mean NLL per target token (EOS included).
class Seq2SeqNet {
 public:
  using Params = Seq2SeqParams;
  using Example = Seq2SeqExample;

  Seq2SeqNet(std::shared_ptr<const text::EmbeddingTable> table, nn::CellSquash squash)
      : emb_(std::move(table)), squash_(squash) {}

  nn::LstmRun encode_run(const Params& p, std::span<const TokenId> source, bool keep_cache) const {
    if (source.empty()) throw InvalidInput("seq2seq: empty source sequence");
    std::vector<Vec> xs;
    xs.reserve(source.size());
    for (auto t : source) xs.push_back(emb_(p.target, t));
    return nn::lstm_forward(p.encoder, xs, nn::LstmState::zeros(p.encoder.hidden_dim()), squash_, keep_cache);
  }

  nn::LstmState encode(const Params& p, std::span<const TokenId> source) const {
    return encode_run(p, source, false).final;
  }

  double accumulate_gradient(const Params& p, const Example& ex, double weight, Params& grad) const {
    const auto enc = encode_run(p, ex.source, true);
    nn::LstmState dinit;
    const double nll = teacher_forced_nll(emb_, p.target, squash_, enc.final, ex.target, weight, &grad.target, &dinit);
    const auto g = nn::lstm_backward(p.encoder, enc, squash_, {}, dinit.h, dinit.c, grad.encoder, true);
    for (std::size_t k = 0; k < ex.source.size(); ++k) emb_.accumulate(grad.target, ex.source[k], g.dx[k]);
    return nll;
  }

  double loss_and_gradient(const Params& p, std::span<const Example* const> batch, Params& grad) const {
    const double w = 1.0 / static_cast<double>(token_count(batch));
    double sum = 0.0;
    for (const Example* ex : batch) sum += accumulate_gradient(p, *ex, w, grad);
    return sum * w;
  }

  double loss(const Params& p, std::span<const Example* const> batch) const {
    double sum = 0.0;
    for (const Example* ex : batch)
      sum += teacher_forced_nll(emb_, p.target, squash_, encode(p, ex->source), ex->target, 0.0, nullptr, nullptr);
    return sum / static_cast<double>(token_count(batch));
  }

  const Embedder& embedder() const { return emb_; }
  nn::CellSquash activation() const { return squash_; }

 private:
  static std::size_t token_count(std::span<const Example* const> batch) {
    std::size_t n = 0;
    for (const Example* ex : batch) n += ex->target.size() + 1;
    return n;
  }

  Embedder emb_;
  nn::CellSquash squash_;
};

struct LmExample {
  Tokens tokens;  // word ids only, EOS implied
};

/// Decoder-only language model over target sentences, zero initial state.
class LanguageModelNet {
 public:
  using Params = TargetParams;
  using Example = LmExample;

  LanguageModelNet(std::shared_ptr<const text::EmbeddingTable> table, nn::CellSquash squash)
      : emb_(std::move(table)), squash_(squash) {}

  nn::LstmState initial_state(const Params& p) const { return nn::LstmState::zeros(p.decoder.hidden_dim()); }

  double loss_and_gradient(const Params& p, std::span<const Example* const> batch, Params& grad) const {
    const double w = 1.0 / static_cast<double>(token_count(batch));
    double sum = 0.0;
    for (const Example* ex : batch)
      sum += teacher_forced_nll(emb_, p, squash_, initial_state(p), ex->tokens, w, &grad, nullptr);
    return sum * w;
  }

  double loss(const Params& p, std::span<const Example* const> batch) const {
    double sum = 0.0;
    for (const Example* ex : batch)
      sum += teacher_forced_nll(emb_, p, squash_, initial_state(p), ex->tokens, 0.0, nullptr, nullptr);
    return sum / static_cast<double>(token_count(batch));
  }

  const Embedder& embedder() const { return emb_; }
  nn::CellSquash activation() const { return squash_; }

 private:
  static std::size_t token_count(std::span<const Example* const> batch) {
    std::size_t n = 0;
    for (const Example* ex : batch) n += ex->tokens.size() + 1;
    return n;
  }

  Embedder emb_;
  nn::CellSquash squash_;
};

namespace detail {

inline nlohmann::json model_header(const char* kind, const text::EmbeddingTable& table, const Seq2SeqConfig& cfg,
                                   bool tuned) {
  return {{"model_kind", kind},
          {"role", std::string(to_string(cfg.role))},
          {"vocab_fingerprint", table.fingerprint()},
          {"vocab_size", table.size()},
          {"train_embeddings", tuned}};
}

inline Seq2SeqConfig config_from_json(const nlohmann::json& j, const char* kind, const text::EmbeddingTable& table) {
  if (j.value("model_kind", "") != kind) throw ParseError(0, std::string("not a ") + kind + " model file");
  const auto meta = nn::read_checkpoint_meta(j);
  if (meta.hidden_dims.size() != 1) throw ParseError(0, std::string(kind) + " needs one hidden_dims entry");
  if (meta.input_dim != table.dim()) throw ConfigurationError("embedding dimension differs from the model's");
  if (j.at("vocab_fingerprint").get<std::string>() != table.fingerprint())
    throw ConfigurationError("embedding table does not match the one the model was trained with");
  Seq2SeqConfig cfg;
  cfg.hidden_units = static_cast<int>(meta.hidden_dims[0]);
  cfg.activation = meta.activation;
  cfg.train_embeddings = j.value("train_embeddings", false);
  cfg.role = role_from_string(j.at("role").get<std::string>());
  return cfg;
}

}  // namespace detail

class Seq2SeqModel {
 public:
  Seq2SeqModel(Seq2SeqConfig cfg, Seq2SeqParams params, std::shared_ptr<const text::EmbeddingTable> table)
      : cfg_(std::move(cfg)), params_(std::move(params)), pipeline_(table), net_(table, cfg_.activation) {
    if (cfg_.role == Role::lm) throw ConfigurationError("a seq2seq model serves the casual or counseling role");
    if (params_.target.projection.cols() != static_cast<Eigen::Index>(space().size()))
      throw ConfigurationError("projection width does not match the vocabulary size");
  }

  static Seq2SeqParams init_params(const Seq2SeqConfig& cfg, const text::EmbeddingTable& table, nn::Rng& rng) {
    Seq2SeqParams p;
    p.encoder = nn::LstmCellParams::uniform(table.dim(), cfg.hidden_units, rng, cfg.init_scale);
    p.target = TargetParams::init(table.dim(), cfg.hidden_units, table.size() + 3, rng, cfg.init_scale);
    if (cfg.train_embeddings) p.target.embedding = table.matrix();
    return p;
  }

  nn::LstmState encode(std::span<const TokenId> source) const { return net_.encode(params_, source); }

  /// One decoder step: distribution over the vocabulary and the next state.
  StepResult decode_step(const nn::LstmState& state, TokenId prev) const {
    return target_step(net_.embedder(), params_.target, cfg_.activation, state, prev);
  }

  const TokenSpace& space() const { return net_.embedder().space(); }
  const Seq2SeqConfig& config() const { return cfg_; }
  const Seq2SeqParams& params() const { return params_; }
  const Seq2SeqNet& net() const { return net_; }
  const text::TextPipeline& pipeline() const { return pipeline_; }

  nlohmann::json to_json() const {
    const auto& table = net_.embedder().table();
    nn::CheckpointMeta meta{table.dim(), {cfg_.hidden_units}, cfg_.activation};
    auto j = nn::make_checkpoint(params_, meta);
    j.update(detail::model_header("seq2seq", table, cfg_, params_.target.embedding.size() > 0));
    return j;
  }

  static Seq2SeqModel from_json(const nlohmann::json& j, std::shared_ptr<const text::EmbeddingTable> table) {
    const auto cfg = detail::config_from_json(j, "seq2seq", *table);
    Seq2SeqConfig zero = cfg;
    zero.init_scale = 0.0;
    nn::Rng rng(0);
    auto params = init_params(zero, *table, rng);
    nn::tensors_from_json(j.at("tensors"), params);
    return Seq2SeqModel(cfg, std::move(params), std::move(table));
  }

  void save(const std::filesystem::path& path) const { nn::write_json_file(path, to_json()); }
  static Seq2SeqModel load(const std::filesystem::path& path, std::shared_ptr<const text::EmbeddingTable> table) {
    return from_json(nn::read_json_file(path), std::move(table));
  }

 private:
  Seq2SeqConfig cfg_;
  Seq2SeqParams params_;
  text::TextPipeline pipeline_;
  Seq2SeqNet net_;
};

class LanguageModel {
 public:
  LanguageModel(Seq2SeqConfig cfg, TargetParams params, std::shared_ptr<const text::EmbeddingTable> table)
      : cfg_(std::move(cfg)), params_(std::move(params)), net_(std::move(table), cfg_.activation) {
    cfg_.role = Role::lm;
    if (params_.projection.cols() != static_cast<Eigen::Index>(space().size()))
      throw ConfigurationError("projection width does not match the vocabulary size");
  }

  static TargetParams init_params(const Seq2SeqConfig& cfg, const text::EmbeddingTable& table, nn::Rng& rng) {
    auto p = TargetParams::init(table.dim(), cfg.hidden_units, table.size() + 3, rng, cfg.init_scale);
    if (cfg.train_embeddings) p.embedding = table.matrix();
    return p;
  }

  StepResult step(const nn::LstmState& state, TokenId prev) const {
    return target_step(net_.embedder(), params_, cfg_.activation, state, prev);
  }

  nn::LstmState initial_state() const { return net_.initial_state(params_); }

  /// Sum of log-probabilities of `tokens` in order, conditioned on BOS. An
  /// EOS inside `tokens` is scored like any other token.
  double lm_score(std::span<const TokenId> tokens) const {
    if (tokens.empty()) throw InvalidInput("lm_score: empty token list");
    auto state = initial_state();
    TokenId prev = space().bos();
    double sum = 0.0;
    for (auto t : tokens) {
      if (!space().valid(t)) throw InvalidInput("lm_score: token id " + std::to_string(t) + " outside the vocabulary");
      const auto r = step(state, prev);
      sum += std::log(r.distribution(t));
      state = r.state;
      prev = t;
    }
    return sum;
  }

  const TokenSpace& space() const { return net_.embedder().space(); }
  const Seq2SeqConfig& config() const { return cfg_; }
  const TargetParams& params() const { return params_; }
  const LanguageModelNet& net() const { return net_; }

  nlohmann::json to_json() const {
    const auto& table = net_.embedder().table();
    nn::CheckpointMeta meta{table.dim(), {cfg_.hidden_units}, cfg_.activation};
    auto j = nn::make_checkpoint(params_, meta);
    j.update(detail::model_header("language_model", table, cfg_, params_.embedding.size() > 0));
    return j;
  }

  static LanguageModel from_json(const nlohmann::json& j, std::shared_ptr<const text::EmbeddingTable> table) {
    const auto cfg = detail::config_from_json(j, "language_model", *table);
    Seq2SeqConfig zero = cfg;
    zero.init_scale = 0.0;
    nn::Rng rng(0);
    auto params = init_params(zero, *table, rng);
    nn::tensors_from_json(j.at("tensors"), params);
    return LanguageModel(cfg, std::move(params), std::move(table));
  }

  void save(const std::filesystem::path& path) const { nn::write_json_file(path, to_json()); }
  static LanguageModel load(const std::filesystem::path& path, std::shared_ptr<const text::EmbeddingTable> table) {
    return from_json(nn::read_json_file(path), std::move(table));
  }

 private:
  Seq2SeqConfig cfg_;
  TargetParams params_;
  LanguageModelNet net_;
};

}  // namespace solace::responder
