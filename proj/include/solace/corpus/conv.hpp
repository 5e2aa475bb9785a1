#pragma once

// '.conv' record format: a line whose first character is 'E' opens a
// conversation; each following line up to the next 'E' is one utterance,
// optionally prefixed by "M ".

#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "solace/errors.hpp"

namespace solace::corpus {

struct Conversation {
  std::vector<std::string> utterances;
  std::size_t line = 0;  // 1-based line of the opening 'E'
};

inline bool operator==(const Conversation& a, const Conversation& b) { return a.utterances == b.utterances; }

/// Pulls one conversation at a time, so files larger than memory stream
/// through. Empty records are skipped and noted in warnings().
class ConvReader {
 public:
  explicit ConvReader(std::istream& in) : in_(in) {}

  std::optional<Conversation> next() {
    while (true) {
      if (!open_) {
        if (!advance()) return std::nullopt;
        if (!is_delimiter(line_)) {
          if (blank(line_)) continue;
          throw ParseError(line_no_, "content before the first 'E' record delimiter");
        }
        open_ = true;
      }
      Conversation conv{{}, line_no_};
      bool more = false;
      while (advance()) {
        if (is_delimiter(line_)) {
          more = true;
          break;
        }
        if (blank(line_)) continue;
        std::string u = line_.rfind("M ", 0) == 0 ? line_.substr(2) : line_;
        if (!u.empty()) conv.utterances.push_back(std::move(u));
      }
      open_ = more;
      if (!conv.utterances.empty()) return conv;
      warnings_.push_back("line " + std::to_string(conv.line) + ": empty conversation skipped");
      if (!more) return std::nullopt;
    }
  }

  const std::vector<std::string>& warnings() const { return warnings_; }
  std::size_t lines_read() const { return line_no_; }

 private:
  static bool is_delimiter(const std::string& s) { return !s.empty() && s[0] == 'E'; }
  static bool blank(const std::string& s) { return s.find_first_not_of(" \t") == std::string::npos; }

  bool advance() {
    if (!std::getline(in_, line_)) return false;
    ++line_no_;
    if (!line_.empty() && line_.back() == '\r') line_.pop_back();
    return true;
  }

  std::istream& in_;
  std::string line_;
  std::size_t line_no_ = 0;
  bool open_ = false;  // a delimiter line has been consumed and not yet used
  std::vector<std::string> warnings_;
};

struct ParsedConv {
  std::vector<Conversation> conversations;
  std::vector<std::string> warnings;
};

inline ParsedConv parse_conv(std::istream& in) {
  ConvReader reader(in);
  ParsedConv out;
  while (auto c = reader.next()) out.conversations.push_back(std::move(*c));
  out.warnings = reader.warnings();
  return out;
}

inline ParsedConv parse_conv_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("cannot open '" + path.string() + "'");
  return parse_conv(in);
}

inline void write_conversation(std::ostream& out, const Conversation& conv) {
  out << "E\n";
  for (const auto& u : conv.utterances) out << "M " << u << '\n';
}

inline void write_conv(std::ostream& out, const std::vector<Conversation>& convs) {
  for (const auto& c : convs) write_conversation(out, c);
}

}  // namespace solace::corpus
