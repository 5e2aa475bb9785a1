#pragma once

#include <Eigen/Dense>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "solace/errors.hpp"

namespace solace::text {

inline constexpr std::size_t kDefaultVocabularyCap = 100000;

/// Word to index map plus dense vectors. Row 0 is the shared pad/unknown
/// slot and is always zero; words occupy rows 1..K in file order.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  explicit EmbeddingTable(Eigen::Index dim) : dim_(dim), flat_(static_cast<std::size_t>(dim), 0.0), words_{""} {}

  /// Appends a word; returns its index. Duplicates keep the first vector.
  std::int32_t add(const std::string& word, const Eigen::VectorXd& vec) {
    if (vec.size() != dim()) throw InvalidInput("embedding vector has wrong dimension for '" + word + "'");
    if (auto it = index_.find(word); it != index_.end()) return it->second;
    const auto idx = static_cast<std::int32_t>(words_.size());
    flat_.insert(flat_.end(), vec.data(), vec.data() + vec.size());
    words_.push_back(word);
    index_.emplace(word, idx);
    return idx;
  }

  Eigen::Index dim() const { return dim_; }
  /// Number of real words K (excludes the pad row).
  std::size_t size() const { return words_.empty() ? 0 : words_.size() - 1; }
  std::size_t rows() const { return words_.size(); }

  std::optional<std::int32_t> find(std::string_view word) const {
    auto it = index_.find(std::string(word));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& word(std::int32_t idx) const { return words_.at(static_cast<std::size_t>(idx)); }
  const std::vector<std::string>& words() const { return words_; }
  /// (K+1) x dim view, row 0 zero.
  Eigen::Map<const RowMatrix> matrix() const {
    return {flat_.data(), static_cast<Eigen::Index>(words_.size()), dim_};
  }
  Eigen::VectorXd vector(std::int32_t idx) const { return matrix().row(idx).transpose(); }

  /// Words only (index 1..K), for building a segmentation lexicon.
  std::vector<std::string> vocabulary() const {
    return words_.empty() ? std::vector<std::string>{} : std::vector<std::string>(words_.begin() + 1, words_.end());
  }

  /// FNV-1a over words and vector bit patterns, as 16 hex digits.
  std::string fingerprint() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void* p, std::size_t n) {
      const auto* b = static_cast<const unsigned char*>(p);
      for (std::size_t k = 0; k < n; ++k) {
        h ^= b[k];
        h *= 1099511628211ULL;
      }
    };
    const std::int64_t d = dim();
    mix(&d, sizeof d);
    for (std::size_t k = 1; k < words_.size(); ++k) {
      mix(words_[k].data(), words_[k].size());
      const unsigned char sep = 0;
      mix(&sep, 1);
      for (Eigen::Index c = 0; c < dim(); ++c) {
        const double v = flat_[k * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(c)];
        mix(&v, sizeof v);
      }
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

 private:
  Eigen::Index dim_ = 0;
  std::vector<double> flat_;
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::int32_t> index_;
};

namespace detail {

inline std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

inline void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace detail

/// Reads "<count> <dim>" then "<word> <dim floats>" rows, keeping the first
/// min(count, cap) distinct words.
inline EmbeddingTable load_embeddings(std::istream& in, std::size_t cap = kDefaultVocabularyCap) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "embedding file is empty");
  detail::strip_cr(line);
  const auto header = detail::split_spaces(line);
  std::size_t count = 0;
  long long dim = 0;
  if (header.size() != 2 || !detail::parse_number(header[0], count) || !detail::parse_number(header[1], dim) || dim <= 0)
    throw ParseError(1, "expected header '<word_count> <dim>'");

  EmbeddingTable table(dim);
  const std::size_t want = std::min(count, cap);
  std::size_t line_no = 1;
  std::size_t rows_read = 0;
  Eigen::VectorXd vec(dim);
  while (table.size() < want && rows_read < count && std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (line.empty()) continue;
    const auto fields = detail::split_spaces(line);
    if (fields.size() != static_cast<std::size_t>(dim) + 1)
      throw ParseError(line_no, "expected a word and " + std::to_string(dim) + " values, got " +
                                    std::to_string(fields.empty() ? 0 : fields.size() - 1));
    for (long long k = 0; k < dim; ++k)
      if (!detail::parse_number(fields[k + 1], vec(k)))
        throw ParseError(line_no, "bad number '" + std::string(fields[k + 1]) + "'");
    ++rows_read;
    table.add(std::string(fields[0]), vec);
  }
  if (table.size() < want && rows_read < count)
    throw ParseError(line_no, "file ended after " + std::to_string(rows_read) + " of " + std::to_string(count) + " rows");
  return table;
}

inline EmbeddingTable load_embeddings(const std::filesystem::path& path, std::size_t cap = kDefaultVocabularyCap) {
  std::ifstream in(path);
  if (!in) throw NotFound("cannot open embedding file '" + path.string() + "'");
  return load_embeddings(in, cap);
}

/// Writes the format load_embeddings reads, round-trip exact.
inline void write_embeddings(std::ostream& out, const EmbeddingTable& table) {
  const auto m = table.matrix();
  out << table.size() << ' ' << table.dim() << '\n';
  out.precision(17);
  for (std::size_t k = 1; k < table.rows(); ++k) {
    out << table.words()[k];
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << ' ' << m(static_cast<Eigen::Index>(k), c);
    out << '\n';
  }
}

}  // namespace solace::text
