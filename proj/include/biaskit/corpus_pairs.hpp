#pragma once

#include <cstddef>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "biaskit/error.hpp"
#include "biaskit/sent_debias.hpp"
#include "biaskit/test_resources.hpp"
#include "biaskit/unicode.hpp"

namespace biaskit {

struct SentencePair {
  std::string pair_id;
  std::string original;
  std::string swapped;
  std::string found;        ///< gendered token as it appeared (punctuation stripped)
  std::string replacement;  ///< token written in its place
  std::string original_group;  ///< "male" or "female"
  std::size_t line = 0;        ///< 1-based corpus line
  std::size_t offset = 0;      ///< byte offset of the sentence in the corpus

  bool operator==(const SentencePair&) const = default;
};

struct PairGenOptions {
  std::size_t max_tokens = 512;
  std::size_t limit = 30000;
};

struct PairGenStats {
  std::size_t sentences = 0;
  std::size_t emitted = 0;
  std::size_t no_gendered = 0;
  std::size_t multiple_gendered = 0;
  std::size_t excluded = 0;
  std::size_t ambiguous = 0;
  std::size_t too_long = 0;
  bool limit_reached = false;

  nlohmann::json to_json() const {
    return {{"sentences", sentences},         {"emitted", emitted},   {"no_gendered", no_gendered},
            {"multiple_gendered", multiple_gendered}, {"excluded", excluded}, {"ambiguous", ambiguous},
            {"too_long", too_long},           {"limit_reached", limit_reached}};
  }
};

namespace text {

inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

/// Splits a line into sentences at '.', '!' or '?' followed by whitespace
/// (or the end of the line). Whitespace runs inside a sentence collapse to
/// one space. Returns (sentence, byte offset within the line).
inline std::vector<std::pair<std::string, std::size_t>> split_sentences(std::string_view line) {
  std::vector<std::pair<std::string, std::size_t>> out;
  std::size_t start = 0;
  auto flush = [&](std::size_t end) {
    std::string sentence;
    std::size_t first = std::string_view::npos;
    bool pending_space = false;
    for (std::size_t i = start; i < end; ++i) {
      if (is_space(line[i])) {
        pending_space = !sentence.empty();
        continue;
      }
      if (first == std::string_view::npos) first = i;
      if (pending_space) sentence.push_back(' ');
      pending_space = false;
      sentence.push_back(line[i]);
    }
    if (!sentence.empty()) out.emplace_back(std::move(sentence), first);
    start = end;
  };
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if ((c == '.' || c == '!' || c == '?') && (i + 1 == line.size() || is_space(line[i + 1]))) flush(i + 1);
  }
  flush(line.size());
  return out;
}

inline std::vector<std::string_view> tokens(std::string_view sentence) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < sentence.size()) {
    while (pos < sentence.size() && is_space(sentence[pos])) ++pos;
    if (pos >= sentence.size()) break;
    std::size_t end = pos;
    while (end < sentence.size() && !is_space(sentence[end])) ++end;
    out.push_back(sentence.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

/// Byte length of a leading punctuation character (ASCII or a common
/// UTF-8 quote/dash/ellipsis), 0 if none.
inline std::size_t punct_prefix(std::string_view s) {
  if (s.empty()) return 0;
  const auto c = static_cast<unsigned char>(s[0]);
  if (c < 0x80) {
    const bool letter_or_digit = (c >= '0' && c <= '9') || (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z');
    return letter_or_digit ? 0 : 1;
  }
  static constexpr std::string_view kMulti[] = {"“", "”", "‘", "’", "„",
                                                "«", "»", "…", "–", "—"};
  for (auto p : kMulti) {
    if (s.substr(0, p.size()) == p) return p.size();
  }
  return 0;
}

inline std::size_t punct_suffix(std::string_view s) {
  if (s.empty()) return 0;
  const auto c = static_cast<unsigned char>(s.back());
  if (c < 0x80) return punct_prefix(s.substr(s.size() - 1));
  static constexpr std::string_view kMulti[] = {"“", "”", "‘", "’", "„",
                                                "«", "»", "…", "–", "—"};
  for (auto p : kMulti) {
    if (s.size() >= p.size() && s.substr(s.size() - p.size()) == p) return p.size();
  }
  return 0;
}

/// A whitespace token split into leading punctuation, word core and
/// trailing punctuation.
struct TokenParts {
  std::string_view lead, core, trail;
};

inline TokenParts split_token(std::string_view token) {
  std::size_t a = 0;
  while (a < token.size()) {
    const auto n = punct_prefix(token.substr(a));
    if (n == 0) break;
    a += n;
  }
  std::size_t b = token.size();
  while (b > a) {
    const auto n = punct_suffix(token.substr(a, b - a));
    if (n == 0) break;
    b -= n;
  }
  return {token.substr(0, a), token.substr(a, b - a), token.substr(b)};
}

/// Lowercases the first letter (ASCII and Latin-1 capitals); the rest of
/// the word is left alone.
inline std::string fold_first(std::string_view word) {
  std::string out(word);
  if (out.empty()) return out;
  const auto c0 = static_cast<unsigned char>(out[0]);
  if (c0 >= 'A' && c0 <= 'Z') {
    out[0] = static_cast<char>(c0 + 32);
  } else if (c0 == 0xC3 && out.size() > 1) {
    const auto c1 = static_cast<unsigned char>(out[1]);
    if (c1 >= 0x80 && c1 <= 0x9E && c1 != 0x97) out[1] = static_cast<char>(c1 + 0x20);
  }
  return out;
}

inline std::string upper_first(std::string_view word) {
  std::string out(word);
  if (out.empty()) return out;
  const auto c0 = static_cast<unsigned char>(out[0]);
  if (c0 >= 'a' && c0 <= 'z') {
    out[0] = static_cast<char>(c0 - 32);
  } else if (c0 == 0xC3 && out.size() > 1) {
    const auto c1 = static_cast<unsigned char>(out[1]);
    if (c1 >= 0xA0 && c1 <= 0xBE && c1 != 0xB7) out[1] = static_cast<char>(c1 - 0x20);
  }
  return out;
}

inline bool starts_upper(std::string_view word) { return !word.empty() && fold_first(word) != word; }

}  // namespace text

/// Bidirectional gendered-word map built from (male, female) pairs. Words
/// occurring in more than one pair have no unique counterpart; sentences
/// containing them, or any word paired with them, are never swapped.
class SwapTable {
 public:
  SwapTable(const std::vector<WordPair>& pairs, const std::set<std::string>& excluded) {
    if (pairs.empty()) throw ValidationError("gendered pair list is empty");
    std::map<std::string, int> uses;
    std::set<std::pair<std::string, std::string>> distinct;
    for (const auto& [m, f] : pairs) {
      const std::string km = text::fold_first(nfc(m));
      const std::string kf = text::fold_first(nfc(f));
      if (!distinct.emplace(km, kf).second) continue;
      ++uses[km];
      ++uses[kf];
    }
    for (const auto& e : excluded) excluded_.insert(text::fold_first(nfc(e)));
    for (const auto& [word, n] : uses) {
      if (excluded_.count(word)) {
        throw ValidationError("excluded token '" + word + "' appears in the pair list");
      }
    }
    for (const auto& [m0, f0] : pairs) {
      const std::string m = nfc(m0);
      const std::string f = nfc(f0);
      const std::string km = text::fold_first(m);
      const std::string kf = text::fold_first(f);
      if (km == kf) throw ValidationError("pair (" + m + ", " + f + ") maps a word onto itself");
      // Both sides go: the swap would not be invertible.
      if (uses[km] > 1 || uses[kf] > 1) {
        ambiguous_.insert(km);
        ambiguous_.insert(kf);
        continue;
      }
      map_.emplace(km, Entry{f, "male"});
      map_.emplace(kf, Entry{m, "female"});
    }
  }

  struct Entry {
    std::string counterpart;
    std::string group;  ///< group of the word being looked up
  };

  const Entry* find(std::string_view core) const {
    auto it = map_.find(text::fold_first(core));
    return it == map_.end() ? nullptr : &it->second;
  }
  bool is_ambiguous(std::string_view core) const { return ambiguous_.count(text::fold_first(core)) > 0; }
  bool is_excluded(std::string_view core) const { return excluded_.count(text::fold_first(core)) > 0; }
  const std::set<std::string>& ambiguous() const noexcept { return ambiguous_; }

 private:
  std::map<std::string, Entry> map_;
  std::set<std::string> ambiguous_;
  std::set<std::string> excluded_;
};

/// Swaps the single gendered token of a sentence, keeping surrounding
/// punctuation and the capitalization of its first letter. Returns nothing
/// unless the sentence holds exactly one swappable token.
inline std::optional<SentencePair> swap_sentence(std::string_view sentence, const SwapTable& table) {
  const auto toks = text::tokens(sentence);
  std::optional<std::size_t> hit;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const auto parts = text::split_token(toks[i]);
    if (table.is_excluded(parts.core) || table.is_ambiguous(parts.core)) return std::nullopt;
    if (table.find(parts.core)) {
      if (hit) return std::nullopt;
      hit = i;
    }
  }
  if (!hit) return std::nullopt;
  const auto parts = text::split_token(toks[*hit]);
  const auto* entry = table.find(parts.core);
  std::string replacement = text::starts_upper(parts.core) ? text::upper_first(entry->counterpart) : entry->counterpart;

  SentencePair pair;
  pair.original = std::string(sentence);
  pair.found = std::string(parts.core);
  pair.replacement = replacement;
  pair.original_group = entry->group;
  std::string swapped;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i) swapped.push_back(' ');
    if (i == *hit) {
      swapped.append(parts.lead).append(replacement).append(parts.trail);
    } else {
      swapped.append(toks[i]);
    }
  }
  pair.swapped = std::move(swapped);
  return pair;
}

struct PairGenResult {
  std::vector<SentencePair> pairs;
  PairGenStats stats;
};

/// Streams the corpus line by line (a line break always ends a sentence)
/// and emits a pair for every sentence with exactly one gendered token, no
/// excluded or ambiguous token and at most max_tokens tokens, until `limit`
/// pairs exist.
inline PairGenResult generate_pairs(std::istream& corpus, const std::vector<WordPair>& pairs,
                                    const std::set<std::string>& excluded, const PairGenOptions& options = {}) {
  const SwapTable table(pairs, excluded);
  PairGenResult result;
  std::string line;
  std::size_t line_no = 0;
  std::size_t line_offset = 0;
  while (result.pairs.size() < options.limit && std::getline(corpus, line)) {
    ++line_no;
    for (const auto& [sentence, offset] : text::split_sentences(line)) {
      if (result.pairs.size() >= options.limit) {
        result.stats.limit_reached = true;
        break;
      }
      ++result.stats.sentences;
      const auto toks = text::tokens(sentence);
      if (toks.size() > options.max_tokens) {
        ++result.stats.too_long;
        continue;
      }
      std::size_t gendered = 0;
      bool excluded_hit = false;
      bool ambiguous_hit = false;
      for (auto t : toks) {
        const auto core = text::split_token(t).core;
        if (table.is_excluded(core)) excluded_hit = true;
        if (table.is_ambiguous(core)) ambiguous_hit = true;
        if (table.find(core)) ++gendered;
      }
      if (excluded_hit) {
        ++result.stats.excluded;
        continue;
      }
      if (ambiguous_hit) {
        ++result.stats.ambiguous;
        continue;
      }
      if (gendered == 0) {
        ++result.stats.no_gendered;
        continue;
      }
      if (gendered > 1) {
        ++result.stats.multiple_gendered;
        continue;
      }
      auto pair = swap_sentence(sentence, table);
      char id[32];
      std::snprintf(id, sizeof id, "p%06zu", result.pairs.size() + 1);
      pair->pair_id = id;
      pair->line = line_no;
      pair->offset = line_offset + offset;
      result.pairs.push_back(std::move(*pair));
    }
    line_offset += line.size() + 1;
  }
  if (result.pairs.size() >= options.limit) result.stats.limit_reached = true;
  if (corpus.bad()) throw IoError("error while reading corpus");
  result.stats.emitted = result.pairs.size();
  return result;
}

/// Manifest rows "<pair_id>a" (original) and "<pair_id>b" (swapped).
inline Manifest pairs_manifest(const std::vector<SentencePair>& pairs) {
  Manifest manifest;
  for (const auto& p : pairs) {
    const std::string other = p.original_group == "male" ? "female" : "male";
    manifest.add(p.pair_id + "a", {p.original, p.original_group, p.pair_id});
    manifest.add(p.pair_id + "b", {p.swapped, other, p.pair_id});
  }
  return manifest;
}

/// Writes the manifest TSV (always with its header) and the plain sentence
/// list for the encoder.
inline void emit_manifest(const std::vector<SentencePair>& pairs, const std::string& manifest_path,
                          const std::string& sentences_path) {
  const Manifest manifest = pairs_manifest(pairs);
  save_manifest(manifest, manifest_path);
  save_sentence_list(manifest, sentences_path);
}

/// Inverse of pairs_manifest (pivot tokens and offsets are not stored).
inline std::vector<SentencePair> pairs_from_manifest(const Manifest& manifest) {
  std::vector<SentencePair> out;
  std::map<std::string, std::size_t> slot;
  for (const auto& id : manifest.ids) {
    const auto& e = manifest.entries.at(id);
    if (!e.pair_id) continue;
    auto [it, fresh] = slot.emplace(*e.pair_id, out.size());
    if (fresh) {
      SentencePair p;
      p.pair_id = *e.pair_id;
      p.original = e.text;
      p.original_group = e.group;
      out.push_back(std::move(p));
    } else {
      out[it->second].swapped = e.text;
    }
  }
  return out;
}

}  // namespace biaskit
