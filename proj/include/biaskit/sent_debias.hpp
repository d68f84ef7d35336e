#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "biaskit/embedding_store.hpp"
#include "biaskit/error.hpp"
#include "biaskit/parallel.hpp"
#include "biaskit/subspace.hpp"
#include "biaskit/test_resources.hpp"

namespace biaskit {

/// One manifest row: sentence text, group tag ("male"/"female" for
/// generated pairs, the list key for SEAT sentences) and pair id.
struct ManifestEntry {
  std::string text;
  std::string group;
  std::optional<std::string> pair_id;

  bool operator==(const ManifestEntry&) const = default;
};

/// Ordered manifest; rows keep file order.
struct Manifest {
  std::vector<std::string> ids;
  std::map<std::string, ManifestEntry> entries;

  void add(std::string id, ManifestEntry entry) {
    if (!entries.emplace(id, std::move(entry)).second) {
      throw ValidationError("duplicate manifest id '" + id + "'");
    }
    ids.push_back(std::move(id));
  }

  bool operator==(const Manifest&) const = default;
};

inline constexpr std::string_view kManifestHeader = "id\tpair_id\tgroup\ttext";

namespace detail {

inline std::string tsv_clean(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  }
  return out;
}

}  // namespace detail

inline std::string format_manifest(const Manifest& manifest) {
  std::ostringstream out;
  out << kManifestHeader << '\n';
  for (const auto& id : manifest.ids) {
    const auto& e = manifest.entries.at(id);
    out << id << '\t' << e.pair_id.value_or("-") << '\t' << e.group << '\t' << detail::tsv_clean(e.text) << '\n';
  }
  return out.str();
}

inline void save_manifest(const Manifest& manifest, const std::string& path) {
  detail::write_text_file(path, format_manifest(manifest));
}

/// The encoder input: one "<id>\t<text>" line per manifest row.
inline std::string format_sentence_list(const Manifest& manifest) {
  std::ostringstream out;
  for (const auto& id : manifest.ids) out << id << '\t' << detail::tsv_clean(manifest.entries.at(id).text) << '\n';
  return out.str();
}

inline void save_sentence_list(const Manifest& manifest, const std::string& path) {
  detail::write_text_file(path, format_sentence_list(manifest));
}

/// Manifest for the sentences of a (template-expanded) test spec: ids
/// s000001..., group = list key, no pair ids. A sentence shared by two
/// lists is listed once.
inline Manifest seat_manifest(const TestSpec& spec) {
  Manifest manifest;
  std::set<std::string> seen;
  auto lists = spec.lists();
  std::size_t next = 1;
  for (std::size_t l = 0; l < lists.size(); ++l) {
    for (const auto& text : lists[l]->items) {
      if (!seen.insert(text).second) continue;
      char id[32];
      std::snprintf(id, sizeof id, "s%06zu", next++);
      manifest.add(id, {text, std::string(TestSpec::kListKeys[l]), std::nullopt});
    }
  }
  return manifest;
}

/// Parses the manifest TSV; pair ids must occur exactly twice.
inline Manifest load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest: " + path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path, 1, "missing manifest header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kManifestHeader) throw FormatError(path, 1, "expected header \"id<TAB>pair_id<TAB>group<TAB>text\"");
  Manifest manifest;
  std::map<std::string, int> pair_counts;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t pos = 0;
    for (int f = 0; f < 3; ++f) {
      const auto tab = line.find('\t', pos);
      if (tab == std::string::npos) throw FormatError(path, line_no, "expected 4 tab-separated fields");
      fields.push_back(line.substr(pos, tab - pos));
      pos = tab + 1;
    }
    fields.push_back(line.substr(pos));
    if (fields[0].empty()) throw FormatError(path, line_no, "empty id");
    ManifestEntry entry{nfc(fields[3]), fields[2], std::nullopt};
    if (fields[1] != "-") {
      entry.pair_id = fields[1];
      ++pair_counts[fields[1]];
    }
    try {
      manifest.add(fields[0], std::move(entry));
    } catch (const ValidationError& e) {
      throw FormatError(path, line_no, e.what());
    }
  }
  for (const auto& [pair, count] : pair_counts) {
    if (count != 2) {
      throw FormatError(path + ": pair id '" + pair + "' occurs " + std::to_string(count) + " times, expected 2");
    }
  }
  return manifest;
}

/// Sentence vectors with their manifest. Rows follow file order; text
/// lookups go through the manifest.
class SentenceVectorSet {
 public:
  SentenceVectorSet() = default;

  SentenceVectorSet(std::vector<std::string> ids, std::vector<double> matrix, std::size_t dim,
                    Manifest manifest = {})
      : ids_(std::move(ids)), matrix_(std::move(matrix)), dim_(dim), manifest_(std::move(manifest)) {
    if (dim_ == 0) throw ValidationError("sentence vector dimension must be positive");
    if (matrix_.size() != ids_.size() * dim_) throw ValidationError("sentence matrix size mismatch");
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      if (!index_.emplace(ids_[i], i).second) throw ValidationError("duplicate sentence id '" + ids_[i] + "'");
    }
    for (double c : matrix_) {
      if (!std::isfinite(c)) throw ValidationError("non-finite sentence vector component");
    }
    for (const auto& id : manifest_.ids) {
      const auto& text = manifest_.entries.at(id).text;
      if (index_.count(id)) by_text_.emplace(text, index_.at(id));
    }
  }

  std::size_t size() const noexcept { return ids_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const std::vector<double>& matrix() const noexcept { return matrix_; }
  const Manifest& manifest() const noexcept { return manifest_; }
  VectorView row(std::size_t i) const { return {matrix_.data() + i * dim_, dim_}; }

  std::optional<VectorView> by_id(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return row(it->second);
  }

  /// Vector for a sentence text (first manifest row carrying it).
  std::optional<VectorView> lookup(std::string_view text) const {
    auto it = by_text_.find(std::string(text));
    if (it == by_text_.end()) return std::nullopt;
    return row(it->second);
  }

  SentenceVectorSet with_matrix(std::vector<double> matrix) const {
    return SentenceVectorSet(ids_, std::move(matrix), dim_, manifest_);
  }

  /// (male, female) vectors of every pair whose two members have vectors,
  /// in manifest order of the pair's first row. Members are oriented by
  /// group tag; untagged pairs keep manifest order.
  std::vector<std::pair<VectorView, VectorView>> complete_pairs() const {
    std::map<std::string, std::vector<std::string>> members;
    std::vector<std::string> order;
    for (const auto& id : manifest_.ids) {
      const auto& e = manifest_.entries.at(id);
      if (!e.pair_id || !index_.count(id)) continue;
      auto& m = members[*e.pair_id];
      if (m.empty()) order.push_back(*e.pair_id);
      m.push_back(id);
    }
    std::vector<std::pair<VectorView, VectorView>> out;
    for (const auto& pid : order) {
      const auto& m = members.at(pid);
      if (m.size() != 2) continue;
      std::string first = m[0];
      std::string second = m[1];
      if (manifest_.entries.at(first).group == "female" && manifest_.entries.at(second).group == "male") {
        std::swap(first, second);
      }
      out.emplace_back(*by_id(first), *by_id(second));
    }
    return out;
  }

 private:
  std::vector<std::string> ids_;
  std::vector<double> matrix_;
  std::size_t dim_ = 0;
  Manifest manifest_;
  std::unordered_map<std::string, std::size_t> index_;
  std::unordered_map<std::string, std::size_t> by_text_;
};

/// Strict reader for "N d" + "<id> <c1> ... <cd>" files.
inline SentenceVectorSet load_sentence_vectors(const std::string& path, Manifest manifest = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open sentence vectors: " + path);
  std::string raw;
  if (!std::getline(in, raw)) throw FormatError(path, 1, "missing header \"N d\"");
  auto header = detail::split_fields(detail::strip_eol(raw), ' ');
  std::size_t count = 0, dim = 0;
  if (header.size() != 2 || !detail::parse_size(header[0], count) || !detail::parse_size(header[1], dim) ||
      dim == 0) {
    throw FormatError(path, 1, "malformed header, expected \"N d\"");
  }
  std::vector<std::string> ids;
  std::vector<double> matrix;
  matrix.reserve(count * dim);
  std::unordered_map<std::string, std::size_t> seen;
  std::size_t line_no = 1;
  while (std::getline(in, raw)) {
    ++line_no;
    auto line = detail::strip_eol(raw);
    if (line.empty()) continue;
    if (ids.size() == count) throw FormatError(path, line_no, "more rows than declared");
    auto fields = detail::split_fields(line, ' ');
    if (fields.size() - 1 != dim) {
      throw FormatError(path, line_no,
                        "row length " + std::to_string(fields.size() - 1) + " != declared dim " + std::to_string(dim));
    }
    std::string id(fields[0]);
    if (!seen.emplace(id, line_no).second) throw FormatError(path, line_no, "duplicate id '" + id + "'");
    for (std::size_t j = 1; j < fields.size(); ++j) {
      double v = 0.0;
      if (!detail::parse_double(fields[j], v) || !std::isfinite(v)) {
        throw FormatError(path, line_no, "bad component '" + std::string(fields[j]) + "'");
      }
      matrix.push_back(v);
    }
    ids.push_back(std::move(id));
  }
  if (ids.size() != count) {
    throw FormatError(path, line_no, "declared " + std::to_string(count) + " rows, found " + std::to_string(ids.size()));
  }
  return SentenceVectorSet(std::move(ids), std::move(matrix), dim, std::move(manifest));
}

inline void save_sentence_vectors(const SentenceVectorSet& set, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write sentence vectors: " + path);
  out << set.size() << ' ' << set.dim() << '\n';
  for (std::size_t i = 0; i < set.size(); ++i) {
    out << set.ids()[i];
    for (double c : set.row(i)) out << ' ' << detail::format_double(c);
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

/// Bias subspace from the complete sentence pairs, centered per pair.
inline BiasSubspace fit_sentence_subspace(const SentenceVectorSet& set, std::size_t k) {
  const auto pairs = set.complete_pairs();
  if (pairs.empty()) throw ValidationError("no complete sentence pairs");
  if (k > set.dim()) {
    throw ValidationError("k = " + std::to_string(k) + " exceeds the dimension " + std::to_string(set.dim()));
  }
  return fit_pair_subspace(pairs, k);
}

/// v - sum_j (v . b_j) b_j. No renormalization.
inline Vector debias_vector(VectorView v, const BiasSubspace& subspace) { return remove_projection(v, subspace); }

struct SentDebiasOptions {
  /// Rescale each output row to unit length (zero rows stay zero).
  bool renormalize = false;
  unsigned threads = 0;
};

inline SentenceVectorSet debias_batch(const SentenceVectorSet& set, const BiasSubspace& subspace,
                                      const SentDebiasOptions& options = {}) {
  if (subspace.dim() != set.dim()) {
    throw ValidationError("dimension mismatch: vectors have " + std::to_string(set.dim()) + ", subspace has " +
                          std::to_string(subspace.dim()));
  }
  const std::size_t d = set.dim();
  std::vector<double> out(set.matrix().size());
  parallel_for(set.size(), options.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Vector r = debias_vector(set.row(i), subspace);
      if (options.renormalize) {
        const double n = norm(r);
        if (n > 0.0) {
          for (double& c : r) c /= n;
        }
      }
      std::copy(r.begin(), r.end(), out.begin() + static_cast<std::ptrdiff_t>(i * d));
    }
  });
  return set.with_matrix(std::move(out));
}

}  // namespace biaskit
