#pragma once

#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "solace/errors.hpp"

namespace solace::text {

struct LabeledText {
  int label = 0;  // 0 or 1
  std::string text;
};

/// "<label>\t<text>" per line; blank lines are skipped.
inline std::vector<LabeledText> read_labeled_tsv(std::istream& in) {
  std::vector<LabeledText> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(line_no, "expected '<label>\\t<text>'");
    const std::string label = line.substr(0, tab);
    if (label != "0" && label != "1") throw ParseError(line_no, "label must be 0 or 1, got '" + label + "'");
    out.push_back({label == "1" ? 1 : 0, line.substr(tab + 1)});
  }
  return out;
}

inline std::vector<LabeledText> read_labeled_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFound("cannot open dataset '" + path.string() + "'");
  return read_labeled_tsv(in);
}

inline void write_labeled_tsv(std::ostream& out, const std::vector<LabeledText>& rows) {
  for (const auto& r : rows) out << r.label << '\t' << r.text << '\n';
}

}  // namespace solace::text
