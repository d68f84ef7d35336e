#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "biaskit/error.hpp"
#include "biaskit/unicode.hpp"

namespace biaskit {

using Vector = std::vector<double>;
using VectorView = std::span<const double>;

enum class EmbeddingFormat { word2vec_text, tsv };

inline double dot(VectorView u, VectorView v) {
  double sum = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) sum += u[i] * v[i];
  return sum;
}

inline double norm(VectorView v) { return std::sqrt(dot(v, v)); }

/// Immutable vocabulary-to-vector map. Rows are stored contiguously
/// (row-major), one per word, in 64-bit floating point.
class EmbeddingSet {
 public:
  static constexpr double kUnitTolerance = 1e-6;

  EmbeddingSet() = default;

  /// Tokens are NFC-normalized; duplicates (after normalization), empty
  /// vocabularies, ragged or non-finite matrices are rejected.
  EmbeddingSet(std::vector<std::string> words, std::vector<double> matrix, std::size_t dim)
      : words_(std::move(words)), matrix_(std::move(matrix)), dim_(dim) {
    if (words_.empty()) throw ValidationError("embedding set must contain at least one word");
    if (dim_ == 0) throw ValidationError("embedding dimension must be positive");
    if (matrix_.size() != words_.size() * dim_) {
      throw ValidationError("matrix holds " + std::to_string(matrix_.size()) +
                            " values, expected " + std::to_string(words_.size() * dim_));
    }
    index_.reserve(words_.size());
    for (std::size_t i = 0; i < words_.size(); ++i) {
      words_[i] = nfc(words_[i]);
      if (!index_.emplace(words_[i], i).second) {
        throw ValidationError("duplicate token '" + words_[i] + "'");
      }
    }
    normalized_ = true;
    for (std::size_t i = 0; i < words_.size(); ++i) {
      auto r = row(i);
      for (double c : r) {
        if (!std::isfinite(c)) throw ValidationError("non-finite component in '" + words_[i] + "'");
      }
      if (std::abs(norm(r) - 1.0) > kUnitTolerance) normalized_ = false;
    }
  }

  std::size_t size() const noexcept { return words_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return words_.empty(); }
  bool normalized() const noexcept { return normalized_; }

  const std::vector<std::string>& words() const noexcept { return words_; }
  const std::vector<double>& matrix() const noexcept { return matrix_; }

  VectorView row(std::size_t i) const { return {matrix_.data() + i * dim_, dim_}; }

  std::optional<std::size_t> find(std::string_view token) const {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  bool contains(std::string_view token) const { return find(token).has_value(); }

  std::optional<VectorView> lookup(std::string_view token) const {
    if (auto i = find(token)) return row(*i);
    return std::nullopt;
  }

  /// Throws ValidationError for out-of-vocabulary tokens.
  VectorView vector(std::string_view token) const {
    if (auto i = find(token)) return row(*i);
    throw ValidationError("token '" + std::string(token) + "' not in vocabulary");
  }

  /// Same vocabulary, new rows.
  EmbeddingSet with_matrix(std::vector<double> matrix) const {
    return EmbeddingSet(words_, std::move(matrix), dim_);
  }

 private:
  std::vector<std::string> words_;
  std::vector<double> matrix_;
  std::size_t dim_ = 0;
  bool normalized_ = false;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Cosine similarity clamped to [-1, 1]. Zero-norm input throws
/// DegenerateError.
inline double cosine(VectorView u, VectorView v) {
  if (u.size() != v.size()) throw ValidationError("cosine: dimension mismatch");
  const double nu = norm(u);
  const double nv = norm(v);
  if (nu == 0.0 || nv == 0.0) throw DegenerateError("cosine of a zero-norm vector");
  return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

inline double cosine(const EmbeddingSet& set, std::string_view a, std::string_view b) {
  auto u = set.vector(a);
  auto v = set.vector(b);
  if (norm(u) == 0.0) throw DegenerateError("zero-norm vector for '" + std::string(a) + "'");
  if (norm(v) == 0.0) throw DegenerateError("zero-norm vector for '" + std::string(b) + "'");
  return cosine(u, v);
}

inline EmbeddingSet normalize_all(const EmbeddingSet& set) {
  std::vector<double> out(set.matrix());
  const std::size_t d = set.dim();
  for (std::size_t i = 0; i < set.size(); ++i) {
    const double n = norm(set.row(i));
    if (n == 0.0) throw DegenerateError("zero-norm vector for '" + set.words()[i] + "'");
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] /= n;
  }
  return set.with_matrix(std::move(out));
}

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && line[pos] == sep) ++pos;
    if (pos >= line.size()) break;
    std::size_t end = line.find(sep, pos);
    if (end == std::string_view::npos) end = line.size();
    fields.push_back(line.substr(pos, end - pos));
    pos = end;
  }
  return fields;
}

inline std::string_view strip_eol(std::string_view line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) {
    line.remove_suffix(1);
  }
  return line;
}

inline bool parse_double(std::string_view text, double& out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

inline bool parse_size(std::string_view text, std::size_t& out) {
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

inline std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

}  // namespace detail

inline EmbeddingSet load_embeddings(const std::string& path,
                                    EmbeddingFormat format = EmbeddingFormat::word2vec_text) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open embeddings file: " + path);

  std::vector<std::string> words;
  std::vector<double> matrix;
  std::unordered_map<std::string, std::size_t> seen;
  std::size_t dim = 0;
  std::size_t declared = 0;
  std::size_t line_no = 0;
  std::string raw;
  const char sep = format == EmbeddingFormat::tsv ? '\t' : ' ';

  if (format == EmbeddingFormat::word2vec_text) {
    if (!std::getline(in, raw)) throw FormatError(path, 1, "missing header \"<count> <dim>\"");
    line_no = 1;
    auto header = detail::split_fields(detail::strip_eol(raw), ' ');
    if (header.size() != 2 || !detail::parse_size(header[0], declared) ||
        !detail::parse_size(header[1], dim) || declared == 0 || dim == 0) {
      throw FormatError(path, 1, "malformed header, expected \"<count> <dim>\"");
    }
    words.reserve(declared);
    matrix.reserve(declared * dim);
  }

  while (std::getline(in, raw)) {
    ++line_no;
    auto line = detail::strip_eol(raw);
    if (line.empty()) continue;
    auto fields = detail::split_fields(line, sep);
    if (format == EmbeddingFormat::tsv && dim == 0) {
      if (fields.size() < 2) throw FormatError(path, line_no, "row has no vector components");
      dim = fields.size() - 1;
    }
    if (format == EmbeddingFormat::word2vec_text && words.size() == declared) {
      throw FormatError(path, line_no, "more rows than the declared count " + std::to_string(declared));
    }
    if (fields.size() - 1 != dim) {
      throw FormatError(path, line_no,
                        "row length " + std::to_string(fields.size() - 1) +
                            " != declared dim " + std::to_string(dim));
    }
    std::string token = nfc(fields[0]);
    if (!seen.emplace(token, line_no).second) {
      throw FormatError(path, line_no,
                        "duplicate token '" + token + "' (first seen on line " +
                            std::to_string(seen[token]) + ")");
    }
    for (std::size_t j = 1; j < fields.size(); ++j) {
      double value = 0.0;
      if (!detail::parse_double(fields[j], value)) {
        throw FormatError(path, line_no, "unparsable component '" + std::string(fields[j]) + "'");
      }
      if (!std::isfinite(value)) throw FormatError(path, line_no, "non-finite component");
      matrix.push_back(value);
    }
    words.push_back(std::move(token));
  }
  if (format == EmbeddingFormat::word2vec_text && words.size() != declared) {
    throw FormatError(path, line_no,
                      "declared " + std::to_string(declared) + " rows, found " +
                          std::to_string(words.size()));
  }
  if (words.empty()) throw FormatError(path, line_no, "no embedding rows");
  return EmbeddingSet(std::move(words), std::move(matrix), dim);
}

/// word2vec text format, 9 significant digits, LF endings.
inline void save_embeddings(const EmbeddingSet& set, const std::string& path) {
  if (set.empty()) throw ValidationError("refusing to save an empty embedding set");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write embeddings file: " + path);
  out << set.size() << ' ' << set.dim() << '\n';
  for (std::size_t i = 0; i < set.size(); ++i) {
    out << set.words()[i];
    for (double c : set.row(i)) out << ' ' << detail::format_double(c);
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace biaskit
