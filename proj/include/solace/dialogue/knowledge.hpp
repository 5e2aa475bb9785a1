#pragma once

// Append-only Q&A log. One NDJSON line per answered message; export groups
// records by session into '.conv' training records.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "solace/corpus/conv.hpp"
#include "solace/dialogue/routing.hpp"
#include "solace/errors.hpp"

namespace solace::dialogue {

struct KnowledgeRecord {
  std::string session_id;
  std::string question;
  std::string answer;
  double mental_score = 0.0;
  double sentiment_score = 0.0;
  Bot bot_used = Bot::casual;
  std::int64_t timestamp_ms = 0;  // unix epoch

  nlohmann::json to_json() const {
    return {{"session_id", session_id},     {"q", question},
            {"a", answer},                  {"mental_score", mental_score},
            {"sentiment_score", sentiment_score}, {"bot_used", std::string(to_string(bot_used))},
            {"timestamp_ms", timestamp_ms}};
  }

  static KnowledgeRecord from_json(const nlohmann::json& j) {
    KnowledgeRecord r;
    r.session_id = j.at("session_id").get<std::string>();
    r.question = j.at("q").get<std::string>();
    r.answer = j.at("a").get<std::string>();
    r.mental_score = j.at("mental_score").get<double>();
    r.sentiment_score = j.at("sentiment_score").get<double>();
    r.bot_used = bot_from_string(j.at("bot_used").get<std::string>());
    r.timestamp_ms = j.at("timestamp_ms").get<std::int64_t>();
    return r;
  }
};

/// Destination for records. Implementations must make append atomic with
/// respect to concurrent callers and must never rewrite earlier records.
class KnowledgeSink {
 public:
  virtual ~KnowledgeSink() = default;
  virtual void append(const KnowledgeRecord& r) = 0;
  virtual std::vector<KnowledgeRecord> records() const = 0;
  virtual std::size_t size() const = 0;
};

class MemoryKnowledgeStore : public KnowledgeSink {
 public:
  void append(const KnowledgeRecord& r) override {
    std::lock_guard lock(mu_);
    records_.push_back(r);
  }
  std::vector<KnowledgeRecord> records() const override {
    std::lock_guard lock(mu_);
    return records_;
  }
  std::size_t size() const override {
    std::lock_guard lock(mu_);
    return records_.size();
  }

 private:
  mutable std::mutex mu_;
  std::vector<KnowledgeRecord> records_;
};

inline std::vector<KnowledgeRecord> read_knowledge_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("cannot open '" + path.string() + "'");
  std::vector<KnowledgeRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(KnowledgeRecord::from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return out;
}

/// NDJSON file, one flushed line per record.
class FileKnowledgeStore : public KnowledgeSink {
 public:
  explicit FileKnowledgeStore(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    if (std::filesystem::exists(path_)) count_ = read_knowledge_file(path_).size();
  }

  void append(const KnowledgeRecord& r) override {
    const std::string line = r.to_json().dump() + '\n';
    std::lock_guard lock(mu_);
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    out << line;
    out.flush();
    if (!out) throw Error("knowledge store append failed: " + path_.string());
    ++count_;
  }

  std::vector<KnowledgeRecord> records() const override {
    std::lock_guard lock(mu_);
    if (!std::filesystem::exists(path_)) return {};
    return read_knowledge_file(path_);
  }

  std::size_t size() const override {
    std::lock_guard lock(mu_);
    return count_;
  }

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::size_t count_ = 0;
};

/// Line breaks would split an utterance across '.conv' lines.
inline std::string single_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\r', ' ');
  return s;
}

/// One conversation per session (in order of first appearance), holding
/// each record's question and answer as consecutive utterances.
inline std::vector<corpus::Conversation> export_conversations(const std::vector<KnowledgeRecord>& records) {
  std::vector<corpus::Conversation> out;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& r : records) {
    auto [it, fresh] = index.try_emplace(r.session_id, out.size());
    if (fresh) out.emplace_back();
    auto& conv = out[it->second];
    conv.utterances.push_back(single_line(r.question));
    conv.utterances.push_back(single_line(r.answer));
  }
  return out;
}

inline void export_conv(const std::vector<KnowledgeRecord>& records, std::ostream& out) {
  corpus::write_conv(out, export_conversations(records));
}

}  // namespace solace::dialogue
