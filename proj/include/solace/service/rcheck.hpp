#pragma once

// Response-quality index from human annotations: labels 0 = unqualified,
// 1 = regular, 2 = qualified; R_check = (regular + qualified) / total.

#include <filesystem>
#include <fstream>
#include <istream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "solace/errors.hpp"

namespace solace::service {

struct RcheckReport {
  std::size_t n_unqualified = 0;
  std::size_t n_regular = 0;
  std::size_t n_qualified = 0;

  std::size_t total() const { return n_unqualified + n_regular + n_qualified; }
  double fraction(std::size_t n) const { return static_cast<double>(n) / static_cast<double>(total()); }
  /// One correctly rounded division of the integer counts.
  double r_check() const { return static_cast<double>(n_regular + n_qualified) / static_cast<double>(total()); }

  nlohmann::json to_json() const {
    return {{"n_unqualified", n_unqualified},
            {"n_regular", n_regular},
            {"n_qualified", n_qualified},
            {"n_total", total()},
            {"fraction_unqualified", fraction(n_unqualified)},
            {"fraction_regular", fraction(n_regular)},
            {"fraction_qualified", fraction(n_qualified)},
            {"r_check", r_check()}};
  }
};

inline RcheckReport r_check(std::span<const int> labels) {
  if (labels.empty()) throw InvalidInput("r_check: empty annotation set");
  RcheckReport r;
  for (int l : labels) {
    switch (l) {
      case 0: ++r.n_unqualified; break;
      case 1: ++r.n_regular; break;
      case 2: ++r.n_qualified; break;
      default: throw InvalidInput("annotation label must be 0, 1 or 2");
    }
  }
  return r;
}

/// One label per line; blank lines are ignored.
inline std::vector<int> read_annotations(std::istream& in) {
  std::vector<int> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto b = line.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t");
    const std::string v = line.substr(b, e - b + 1);
    if (v != "0" && v != "1" && v != "2") throw ParseError(line_no, "annotation label must be 0, 1 or 2, got '" + v + "'");
    out.push_back(v[0] - '0');
  }
  return out;
}

inline std::vector<int> read_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFound("cannot open '" + path.string() + "'");
  return read_annotations(in);
}

}  // namespace solace::service
