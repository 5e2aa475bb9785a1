// Umbrella command line: training, corpus filtering, evaluation, the HTTP
// service and a terminal chat.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "solace/classifier/classifier.hpp"
#include "solace/corpus/conv.hpp"
#include "solace/corpus/filter.hpp"
#include "solace/corpus/stats.hpp"
#include "solace/dialogue/knowledge.hpp"
#include "solace/dialogue/manager.hpp"
#include "solace/responder/beam.hpp"
#include "solace/responder/training.hpp"
#include "solace/service/app.hpp"
#include "solace/service/rcheck.hpp"
#include "solace/service/trajectory.hpp"
#include "solace/text/dataset.hpp"
#include "solace/toy_data.hpp"
#include "solace/service/chat_api.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace solace;

namespace {

std::shared_ptr<const text::EmbeddingTable> load_table(const fs::path& path, std::size_t cap) {
  return std::make_shared<const text::EmbeddingTable>(text::load_embeddings(path, cap));
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw NotFound("cannot write '" + path.string() + "'");
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFound("cannot open '" + path.string() + "'");
  return in;
}

void print_json(const json& j, const fs::path& path = {}) {
  if (path.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
  }
}

void log_epoch(const nn::EpochRecord& e) {
  std::fprintf(stderr, "epoch %3d  train %.6f  val %.6f  lr %.2g\n", e.epoch, e.train_loss, e.val_loss, e.lr);
}

json history_json(const nn::TrainHistory& h) {
  json epochs = json::array();
  for (const auto& e : h.epochs)
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"val_loss", std::isnan(e.val_loss) ? json(nullptr) : json(e.val_loss)},
                      {"lr", e.lr}});
  return {{"best_epoch", h.best_epoch}, {"stopped_early", h.stopped_early}, {"epochs", std::move(epochs)}};
}

struct ScheduleFlags {
  nn::TrainSchedule schedule;
  std::string activation = "sigmoid";
  bool train_embeddings = false;
  fs::path checkpoint_dir;

  void add(CLI::App* cmd) {
    cmd->add_option("--epochs", schedule.max_epochs, "Maximum epochs")->capture_default_str();
    cmd->add_option("--batch-size", schedule.batch_size)->capture_default_str();
    cmd->add_option("--lr", schedule.initial_lr, "Initial Adam learning rate")->capture_default_str();
    cmd->add_option("--seed", schedule.rng_seed)->capture_default_str();
    cmd->add_option("--patience", schedule.early_stop_patience)->capture_default_str();
    cmd->add_option("--clip", schedule.clip_norm, "Global gradient-norm clip, <= 0 disables")->capture_default_str();
    cmd->add_option("--activation", activation, "Cell squash")->check(CLI::IsMember({"sigmoid", "tanh"}))->capture_default_str();
    cmd->add_flag("--train-embeddings", train_embeddings, "Fine-tune word vectors");
    cmd->add_option("--checkpoint-dir", checkpoint_dir, "Write a checkpoint after every epoch");
  }
  nn::CellSquash squash() const { return activation == "tanh" ? nn::CellSquash::tanh : nn::CellSquash::sigmoid; }
};

// ---- train-classifier / eval-classifier --------------------------------------

struct TrainClassifierArgs {
  std::string task;
  fs::path train, val, embeddings, out, history;
  std::size_t vocab_cap = text::kDefaultVocabularyCap;
  classifier::ClassifierConfig cfg;
  ScheduleFlags flags;
};

void train_classifier_cmd(const TrainClassifierArgs& a) {
  auto cfg = a.cfg;
  cfg.task_tag = classifier::task_tag_from_string(a.task);
  cfg.schedule = a.flags.schedule;
  cfg.activation = a.flags.squash();
  cfg.train_embeddings = a.flags.train_embeddings;
  auto table = load_table(a.embeddings, a.vocab_cap);
  auto train = text::read_labeled_tsv(a.train);
  std::vector<text::LabeledText> val;
  if (!a.val.empty()) val = text::read_labeled_tsv(a.val);
  nn::FitOptions<classifier::ClassifierParams> opts;
  opts.checkpoint_dir = a.flags.checkpoint_dir;
  opts.on_epoch = log_epoch;
  const auto trained = classifier::train_classifier(std::move(train), std::move(val), cfg, table, opts);
  trained.model.save(a.out);
  if (!a.history.empty()) print_json(history_json(trained.history), a.history);
  std::fprintf(stderr, "wrote %s (best epoch %d)\n", a.out.c_str(), trained.history.best_epoch);
}

struct EvalArgs {
  fs::path model, test, embeddings, out;
  std::size_t vocab_cap = text::kDefaultVocabularyCap;
};

void eval_classifier_cmd(const EvalArgs& a) {
  const auto model = classifier::ClassifierModel::load(a.model, load_table(a.embeddings, a.vocab_cap));
  const auto rows = text::read_labeled_tsv(a.test);
  auto j = model.evaluate(rows).to_json();
  j["task"] = std::string(classifier::to_string(model.task_tag()));
  j["threshold"] = model.threshold();
  print_json(j, a.out);
}

// ---- filter-corpus / stats -----------------------------------------------------

struct FilterArgs {
  fs::path model, in, out, report, embeddings;
  double threshold = corpus::kDefaultFilterThreshold;
  std::size_t vocab_cap = text::kDefaultVocabularyCap;
};

void filter_corpus_cmd(const FilterArgs& a) {
  const auto model = classifier::ClassifierModel::load(a.model, load_table(a.embeddings, a.vocab_cap));
  const corpus::ModelScorer scorer(model);
  auto in = open_in(a.in);
  auto out = open_out(a.out);
  const auto report = corpus::filter_stream(in, out, scorer, a.threshold);
  for (const auto& w : report.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  print_json(report.to_json(), a.report);
}

struct StatsArgs {
  fs::path labeled, report;
  std::string positive_name = "related", negative_name = "casual";
};

void stats_cmd(const StatsArgs& a) {
  if (a.labeled.empty() == a.report.empty()) throw ConfigurationError("stats needs exactly one of --labeled or --report");
  if (!a.labeled.empty()) {
    const auto rows = text::read_labeled_tsv(a.labeled);
    auto s = corpus::corpus_stats(rows);
    s.positive_name = a.positive_name;
    s.negative_name = a.negative_name;
    print_json(s.to_json());
    return;
  }
  auto in = open_in(a.report);
  const auto j = json::parse(in);
  const auto retained = j.at("retained").get<std::size_t>();
  auto s = corpus::corpus_stats(j.at("dropped").get<std::size_t>(), retained);
  s.positive_name = "retained";
  s.negative_name = "dropped";
  print_json(s.to_json());
}

// ---- train-seq2seq / train-lm / generate -----------------------------------------

struct Seq2SeqArgs {
  fs::path pairs, embeddings, out, history;
  std::string role = "casual";
  bool all_utterances = false;
  std::size_t vocab_cap = text::kDefaultVocabularyCap;
  responder::Seq2SeqConfig cfg;
  ScheduleFlags flags;

  responder::Seq2SeqConfig config() const {
    auto c = cfg;
    c.schedule = flags.schedule;
    c.activation = flags.squash();
    c.train_embeddings = flags.train_embeddings;
    return c;
  }
};

std::vector<corpus::Conversation> read_conv(const fs::path& path) {
  auto parsed = corpus::parse_conv_file(path);
  for (const auto& w : parsed.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  return std::move(parsed.conversations);
}

void train_seq2seq_cmd(const Seq2SeqArgs& a) {
  auto cfg = a.config();
  cfg.role = responder::role_from_string(a.role);
  if (cfg.role == responder::Role::lm) throw ConfigurationError("use train-lm for the language model");
  const auto pairs = responder::qa_pairs(read_conv(a.pairs));
  nn::FitOptions<responder::Seq2SeqParams> opts;
  opts.checkpoint_dir = a.flags.checkpoint_dir;
  opts.on_epoch = log_epoch;
  const auto trained = responder::train_seq2seq(pairs, cfg, load_table(a.embeddings, a.vocab_cap), opts);
  trained.model.save(a.out);
  if (!a.history.empty()) print_json(history_json(trained.history), a.history);
  std::fprintf(stderr, "wrote %s from %zu pairs (%zu skipped)\n", a.out.c_str(), pairs.size(), trained.skipped_pairs);
}

void train_lm_cmd(const Seq2SeqArgs& a) {
  std::vector<std::string> sentences;
  const auto convs = read_conv(a.pairs);
  if (a.all_utterances) {
    for (const auto& c : convs) sentences.insert(sentences.end(), c.utterances.begin(), c.utterances.end());
  } else {
    for (const auto& p : responder::qa_pairs(convs)) sentences.push_back(p.answer);
  }
  nn::FitOptions<responder::TargetParams> opts;
  opts.checkpoint_dir = a.flags.checkpoint_dir;
  opts.on_epoch = log_epoch;
  const auto trained = responder::train_language_model(sentences, a.config(), load_table(a.embeddings, a.vocab_cap), opts);
  trained.model.save(a.out);
  if (!a.history.empty()) print_json(history_json(trained.history), a.history);
  std::fprintf(stderr, "wrote %s from %zu sentences (%zu skipped)\n", a.out.c_str(), sentences.size(), trained.skipped);
}

struct GenerateArgs {
  fs::path model, lm, embeddings;
  std::vector<std::string> texts;
  std::size_t vocab_cap = text::kDefaultVocabularyCap;
  responder::DecodeConfig decode;
};

void generate_cmd(const GenerateArgs& a) {
  auto table = load_table(a.embeddings, a.vocab_cap);
  const auto model = responder::Seq2SeqModel::load(a.model, table);
  std::unique_ptr<responder::LanguageModel> lm;
  if (!a.lm.empty()) lm = std::make_unique<responder::LanguageModel>(responder::LanguageModel::load(a.lm, table));
  for (const auto& t : a.texts) {
    const auto g = responder::generate(model, lm.get(), t, a.decode);
    std::cout << json{{"text", t}, {"reply", g.text}, {"fallback", g.fallback}, {"fallback_reason", g.fallback_reason}}.dump()
              << '\n';
  }
}

// ---- rcheck / trajectory / export -----------------------------------------------------

void rcheck_cmd(const fs::path& annotations) {
  const auto labels = service::read_annotations(annotations);
  print_json(service::r_check(labels).to_json());
}

struct TrajectoryArgs {
  fs::path knowledge, out;
  double window_hours = 48.0;
  std::string cohort = "all";
};

void trajectory_cmd(const TrajectoryArgs& a) {
  if (!(a.window_hours > 0)) throw ConfigurationError("--window-hours must be positive");
  const auto records = dialogue::read_knowledge_file(a.knowledge);
  const auto window = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::duration<double, std::ratio<3600>>(a.window_hours));
  const auto rows = service::sentiment_trajectory(records, window,
                                                  a.cohort == "session" ? service::Cohort::session : service::Cohort::all);
  if (a.out.empty()) {
    service::write_trajectory_csv(std::cout, rows);
  } else {
    auto out = open_out(a.out);
    service::write_trajectory_csv(out, rows);
  }
}

void export_cmd(const fs::path& knowledge, const fs::path& out_path) {
  const auto records = dialogue::read_knowledge_file(knowledge);
  if (out_path.empty()) {
    dialogue::export_conv(records, std::cout);
  } else {
    auto out = open_out(out_path);
    dialogue::export_conv(records, out);
  }
}

// ---- serve / chat ---------------------------------------------------------------------

/// Service settings shared by serve and chat, registered on the top-level
/// app so one flat config file serves both. Precedence: command line, then
/// SOLACE_* environment variables, then the --config file.
void add_service_options(CLI::App& app, service::ServiceConfig& c) {
  app.set_config("--config", "", "INI or TOML file of service settings (keys are the long option names)");
  const std::string group = "Service settings (serve, chat)";
  auto* cmd = &app;
  auto path = [&](const char* name, fs::path& p, const char* env, const char* help) {
    cmd->add_option(name, p, help)->envname(env)->group(group);
  };
  path("--embeddings", c.embeddings, "SOLACE_EMBEDDINGS", "Word-vector file");
  path("--mental-model", c.mental_model, "SOLACE_MENTAL_MODEL", "Relatedness classifier");
  path("--sentiment-model", c.sentiment_model, "SOLACE_SENTIMENT_MODEL", "Sentiment classifier");
  path("--casual-model", c.casual_model, "SOLACE_CASUAL_MODEL", "Casual seq2seq model");
  path("--casual-lm", c.casual_lm, "SOLACE_CASUAL_LM", "Language model for casual reranking");
  path("--counseling-model", c.counseling_model, "SOLACE_COUNSELING_MODEL", "Counseling seq2seq model");
  path("--counseling-lm", c.counseling_lm, "SOLACE_COUNSELING_LM", "Language model for counseling reranking");
  path("--knowledge", c.knowledge, "SOLACE_KNOWLEDGE", "Append-only Q&A store (NDJSON)");
  path("--session-dir", c.session_dir, "SOLACE_SESSION_DIR", "Directory for session snapshots");
  path("--web-root", c.web_root, "SOLACE_WEB_ROOT", "Static files served at /");
  cmd->add_option("--vocab-cap", c.vocab_cap)->capture_default_str()->group(group);
  cmd->add_option("--mental-threshold", c.trend.mental_threshold)->envname("SOLACE_MENTAL_THRESHOLD")->capture_default_str()->group(group);
  cmd->add_option("--sentiment-threshold", c.trend.sentiment_threshold)
      ->envname("SOLACE_SENTIMENT_THRESHOLD")
      ->capture_default_str()->group(group);
  cmd->add_option("--trend-window", c.trend.window)->envname("SOLACE_TREND_WINDOW")->capture_default_str()->group(group);
  cmd->add_option("--trend-warmup", c.trend.warmup)->envname("SOLACE_TREND_WARMUP")->capture_default_str()->group(group);
  cmd->add_option("--beam-width", c.decode.beam_width)->capture_default_str()->group(group);
  cmd->add_option("--max-len", c.decode.max_len)->capture_default_str()->group(group);
  cmd->add_option("--lambda", c.decode.lambda, "MMI weight on the language model")->capture_default_str()->group(group);
  cmd->add_option("--idle-expiry-hours", c.idle_expiry_hours)->capture_default_str()->group(group);
  cmd->add_option("--host", c.host)->envname("SOLACE_HOST")->capture_default_str()->group(group);
  cmd->add_option("--port", c.port)->envname("SOLACE_PORT")->capture_default_str()->group(group);
}

std::atomic<httplib::Server*> g_server{nullptr};

void serve_cmd(const service::ServiceConfig& c) {
  dialogue::DialogueManager dm(service::load_bundle(c), service::open_store(c), service::dialogue_config(c));
  service::ChatApi api(dm);
  httplib::Server svr;
  service::install_routes(svr, api, c.web_root);
  const int port = c.port == 0 ? svr.bind_to_any_port(c.host) : (svr.bind_to_port(c.host, c.port) ? c.port : -1);
  if (port < 0) throw ConfigurationError("cannot bind " + c.host + ":" + std::to_string(c.port));
  g_server = &svr;
  std::signal(SIGINT, [](int) {
    if (auto* s = g_server.load()) s->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (auto* s = g_server.load()) s->stop();
  });
  std::fprintf(stderr, "listening on http://%s:%d\n", c.host.c_str(), port);
  svr.listen_after_bind();
  g_server = nullptr;
}

void chat_cmd(const service::ServiceConfig& c) {
  dialogue::DialogueManager dm(service::load_bundle(c), service::open_store(c), service::dialogue_config(c));
  const auto id = dm.create_session();
  std::fprintf(stderr, "session %s; empty line or EOF ends the chat\n", id.c_str());
  std::string line;
  while (std::cout << "> " << std::flush && std::getline(std::cin, line) && !line.empty()) {
    const auto t = dm.respond(id, line);
    std::cout << t.reply_text << "\n  [" << dialogue::to_string(t.bot_used) << "  mental " << t.mental_score
              << "  sentiment " << t.sentiment_score << "]\n";
  }
}

// ---- make-toy -------------------------------------------------------------------------

/// Writes a small synthetic workspace: embeddings, two labeled sets,
/// a dialogue corpus, annotations and a config file pointing at them.
void make_toy_cmd(const fs::path& dir, std::uint64_t seed) {
  fs::create_directories(dir);
  const auto words = toy::ideographs(30);
  auto table = toy::random_table(words, 64, seed);
  {
    auto out = open_out(dir / "embeddings.txt");
    text::write_embeddings(out, *table);
  }
  // words[0] marks negative sentiment, words[1] marks counseling relevance.
  const std::vector<std::string> filler(words.begin() + 2, words.end());
  std::uint64_t s = seed;
  for (const auto& [task, marker] : {std::pair{"sentiment", words[0]}, {"relatedness", words[1]}}) {
    for (const auto& [split, n] : {std::pair{"train", 500}, {"val", 100}, {"test", 100}}) {
      auto out = open_out(dir / (std::string(task) + "_" + split + ".tsv"));
      text::write_labeled_tsv(out, toy::marker_dataset(filler, marker, n, ++s));
    }
  }

  // Each answer copies its question, so the responder can learn it quickly.
  const std::vector<std::string> vocab(words.begin() + 2, words.begin() + 12);
  std::vector<corpus::Conversation> convs;
  const auto seqs = toy::random_sequences(vocab, 1200, 5, ++s);
  for (std::size_t k = 0; k < seqs.size(); k += 2) {
    std::string q;
    for (const auto& w : seqs[k]) q += w;
    convs.push_back({{q, q}, 0});
  }
  {
    auto out = open_out(dir / "dialogues.conv");
    corpus::write_conv(out, convs);
  }
  {
    auto out = open_out(dir / "annotations.txt");
    for (int k = 0; k < 100; ++k) out << (k < 9 ? 0 : k < 61 ? 1 : 2) << '\n';
  }
  auto cfg = open_out(dir / "solace.ini");
  cfg << "embeddings=" << (dir / "embeddings.txt").string() << "\n"
      << "mental-model=" << (dir / "relatedness.json").string() << "\n"
      << "sentiment-model=" << (dir / "sentiment.json").string() << "\n"
      << "casual-model=" << (dir / "casual.json").string() << "\n"
      << "counseling-model=" << (dir / "counseling.json").string() << "\n"
      << "casual-lm=" << (dir / "lm.json").string() << "\n"
      << "counseling-lm=" << (dir / "lm.json").string() << "\n"
      << "knowledge=" << (dir / "knowledge.ndjson").string() << "\n"
      << "session-dir=" << (dir / "sessions").string() << "\n";
  std::fprintf(stderr, "wrote toy workspace to %s\n", dir.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Emotion-aware dialogue engine: classifiers, corpus filter, seq2seq responders and a chat service"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "0.1.0");

  TrainClassifierArgs tc;
  auto* cmd = app.add_subcommand("train-classifier", "Train a sentiment or relatedness classifier");
  cmd->add_option("--task", tc.task)->required()->check(CLI::IsMember({"sentiment", "relatedness"}));
  cmd->add_option("--train", tc.train, "Labeled TSV (label<TAB>text)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--val", tc.val, "Validation TSV; default holds out part of --train")->check(CLI::ExistingFile);
  cmd->add_option("--embeddings", tc.embeddings)->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", tc.out)->required();
  cmd->add_option("--history", tc.history, "Write per-epoch losses as JSON");
  cmd->add_option("--vocab-cap", tc.vocab_cap)->capture_default_str();
  cmd->add_option("--bilstm-units", tc.cfg.bilstm_units)->capture_default_str();
  cmd->add_option("--lstm-units", tc.cfg.lstm_units)->capture_default_str();
  cmd->add_option("--decision-threshold", tc.cfg.decision_threshold)->capture_default_str();
  tc.flags.add(cmd);
  cmd->callback([&] { train_classifier_cmd(tc); });

  EvalArgs ev;
  cmd = app.add_subcommand("eval-classifier", "Precision, recall, F1 and accuracy on a labeled TSV");
  cmd->add_option("--model", ev.model)->required()->check(CLI::ExistingFile);
  cmd->add_option("--test", ev.test)->required()->check(CLI::ExistingFile);
  cmd->add_option("--embeddings", ev.embeddings)->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", ev.out, "Report path; default stdout");
  cmd->add_option("--vocab-cap", ev.vocab_cap)->capture_default_str();
  cmd->callback([&] { eval_classifier_cmd(ev); });

  FilterArgs fa;
  cmd = app.add_subcommand("filter-corpus", "Keep conversations in which any utterance scores at or above the threshold");
  cmd->add_option("--model", fa.model, "Relatedness classifier")->required()->check(CLI::ExistingFile);
  cmd->add_option("--embeddings", fa.embeddings)->required()->check(CLI::ExistingFile);
  cmd->add_option("--in", fa.in)->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", fa.out)->required();
  cmd->add_option("--threshold", fa.threshold)->capture_default_str()->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--report", fa.report, "FilterReport JSON; default stdout");
  cmd->add_option("--vocab-cap", fa.vocab_cap)->capture_default_str();
  cmd->callback([&] { filter_corpus_cmd(fa); });

  StatsArgs st;
  cmd = app.add_subcommand("stats", "Class proportions of a labeled TSV or a filter report");
  cmd->add_option("--labeled", st.labeled)->check(CLI::ExistingFile);
  cmd->add_option("--report", st.report)->check(CLI::ExistingFile);
  cmd->add_option("--positive-name", st.positive_name, "Name of label 1 in --labeled output")->capture_default_str();
  cmd->add_option("--negative-name", st.negative_name, "Name of label 0 in --labeled output")->capture_default_str();
  cmd->callback([&] { stats_cmd(st); });

  Seq2SeqArgs s2s;
  cmd = app.add_subcommand("train-seq2seq", "Train a responder on question/answer pairs from a .conv corpus");
  cmd->add_option("--pairs", s2s.pairs, ".conv corpus; consecutive utterances pair up")->required()->check(CLI::ExistingFile);
  cmd->add_option("--embeddings", s2s.embeddings)->required()->check(CLI::ExistingFile);
  cmd->add_option("--role", s2s.role)->required()->check(CLI::IsMember({"casual", "counseling"}));
  cmd->add_option("--out", s2s.out)->required();
  cmd->add_option("--history", s2s.history, "Write per-epoch losses as JSON");
  cmd->add_option("--hidden-units", s2s.cfg.hidden_units)->capture_default_str();
  cmd->add_option("--vocab-cap", s2s.vocab_cap)->capture_default_str();
  s2s.flags.add(cmd);
  cmd->callback([&] { train_seq2seq_cmd(s2s); });

  Seq2SeqArgs lm;
  cmd = app.add_subcommand("train-lm", "Train the reranking language model on answer utterances");
  cmd->add_option("--corpus", lm.pairs, ".conv corpus")->required()->check(CLI::ExistingFile);
  cmd->add_option("--embeddings", lm.embeddings)->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", lm.out)->required();
  cmd->add_flag("--all-utterances", lm.all_utterances, "Use every utterance, not only answers");
  cmd->add_option("--history", lm.history, "Write per-epoch losses as JSON");
  cmd->add_option("--hidden-units", lm.cfg.hidden_units)->capture_default_str();
  cmd->add_option("--vocab-cap", lm.vocab_cap)->capture_default_str();
  lm.flags.add(cmd);
  cmd->callback([&] { train_lm_cmd(lm); });

  GenerateArgs ge;
  cmd = app.add_subcommand("generate", "Decode replies with beam search and MMI reranking");
  cmd->add_option("--model", ge.model)->required()->check(CLI::ExistingFile);
  cmd->add_option("--lm", ge.lm)->check(CLI::ExistingFile);
  cmd->add_option("--embeddings", ge.embeddings)->required()->check(CLI::ExistingFile);
  cmd->add_option("--text", ge.texts)->required();
  cmd->add_option("--beam-width", ge.decode.beam_width)->capture_default_str();
  cmd->add_option("--max-len", ge.decode.max_len)->capture_default_str();
  cmd->add_option("--lambda", ge.decode.lambda)->capture_default_str();
  cmd->add_option("--vocab-cap", ge.vocab_cap)->capture_default_str();
  cmd->callback([&] {
    ge.decode.validate();
    generate_cmd(ge);
  });

  fs::path annotations;
  cmd = app.add_subcommand("rcheck", "Response-quality index from a file of 0/1/2 labels");
  cmd->add_option("annotations", annotations)->required()->check(CLI::ExistingFile);
  cmd->callback([&] { rcheck_cmd(annotations); });

  TrajectoryArgs tr;
  cmd = app.add_subcommand("trajectory", "Windowed mean sentiment from the knowledge store, as CSV");
  cmd->add_option("--knowledge", tr.knowledge)->required()->check(CLI::ExistingFile);
  cmd->add_option("--window-hours", tr.window_hours)->capture_default_str();
  cmd->add_option("--cohort", tr.cohort)->check(CLI::IsMember({"all", "session"}))->capture_default_str();
  cmd->add_option("--out", tr.out, "CSV path; default stdout");
  cmd->callback([&] { trajectory_cmd(tr); });

  fs::path ex_in, ex_out;
  cmd = app.add_subcommand("export", "Write the knowledge store as a .conv corpus, one record per session");
  cmd->add_option("--knowledge", ex_in)->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", ex_out, ".conv path; default stdout");
  cmd->callback([&] { export_cmd(ex_in, ex_out); });

  service::ServiceConfig service_cfg;
  add_service_options(app, service_cfg);
  cmd = app.add_subcommand("serve", "Run the HTTP chat service");
  cmd->fallthrough();
  cmd->callback([&] { serve_cmd(service_cfg); });

  cmd = app.add_subcommand("chat", "Chat in the terminal through the full dialogue pipeline");
  cmd->fallthrough();
  cmd->callback([&] { chat_cmd(service_cfg); });

  fs::path toy_dir = "toy";
  std::uint64_t toy_seed = 1;
  cmd = app.add_subcommand("make-toy", "Write a small synthetic workspace for trying the tools");
  cmd->add_option("--dir", toy_dir)->capture_default_str();
  cmd->add_option("--seed", toy_seed)->capture_default_str();
  cmd->callback([&] { make_toy_cmd(toy_dir, toy_seed); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
