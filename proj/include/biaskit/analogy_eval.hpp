#pragma once

#include <array>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "biaskit/embedding_store.hpp"
#include "biaskit/error.hpp"
#include "biaskit/parallel.hpp"
#include "biaskit/unicode.hpp"

namespace biaskit {

using json = nlohmann::json;

/// "a is to b as c is to expected".
struct AnalogyQuestion {
  std::array<std::string, 4> words;
};

struct AnalogySection {
  std::string name;
  std::vector<AnalogyQuestion> questions;
};

struct AnalogyDataset {
  std::vector<AnalogySection> sections;

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& s : sections) n += s.questions.size();
    return n;
  }
};

/// question-words layout: ": section" headers, then four tokens per line.
inline AnalogyDataset parse_analogy_dataset(std::istream& in, const std::string& source = "<stream>") {
  AnalogyDataset data;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    auto line = detail::strip_eol(raw);
    if (line.empty()) continue;
    if (line.front() == ':') {
      auto name = line.substr(1);
      while (!name.empty() && name.front() == ' ') name.remove_prefix(1);
      if (name.empty()) throw FormatError(source, line_no, "section header without a name");
      data.sections.push_back({std::string(name), {}});
      continue;
    }
    auto fields = detail::split_fields(line, ' ');
    if (fields.size() != 4) {
      throw FormatError(source, line_no, "expected 4 tokens, found " + std::to_string(fields.size()));
    }
    if (data.sections.empty()) throw FormatError(source, line_no, "question before the first section header");
    AnalogyQuestion q;
    for (std::size_t i = 0; i < 4; ++i) q.words[i] = nfc(fields[i]);
    data.sections.back().questions.push_back(std::move(q));
  }
  for (const auto& s : data.sections) {
    if (s.questions.empty()) throw FormatError(source + ": section '" + s.name + "' has no questions");
  }
  return data;
}

inline AnalogyDataset load_analogy_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open analogy file: " + path);
  return parse_analogy_dataset(in, path);
}

enum class OffsetSign {
  standard,  ///< b - a + c
  flipped,   ///< a - b + c
};

/// Exhaustive cosine scan over precomputed row norms.
class AnalogySolver {
 public:
  explicit AnalogySolver(const EmbeddingSet& set, OffsetSign sign = OffsetSign::standard)
      : set_(set), sign_(sign), norms_(set.size()) {
    for (std::size_t i = 0; i < set.size(); ++i) norms_[i] = norm(set.row(i));
  }

  /// argmax over the vocabulary minus {a, b, c} of cos(w, target); ties go
  /// to the byte-wise smaller token. nullopt if a query word is OOV or the
  /// target vector is zero.
  std::optional<std::string> solve(std::string_view a, std::string_view b, std::string_view c) const {
    auto ia = set_.find(a), ib = set_.find(b), ic = set_.find(c);
    if (!ia || !ib || !ic) return std::nullopt;
    const std::size_t d = set_.dim();
    Vector target(d);
    auto va = set_.row(*ia), vb = set_.row(*ib), vc = set_.row(*ic);
    for (std::size_t j = 0; j < d; ++j) {
      target[j] = sign_ == OffsetSign::standard ? vb[j] - va[j] + vc[j] : va[j] - vb[j] + vc[j];
    }
    const double tn = norm(target);
    if (tn == 0.0) return std::nullopt;

    std::optional<std::size_t> best;
    double best_score = -2.0;
    for (std::size_t i = 0; i < set_.size(); ++i) {
      if (i == *ia || i == *ib || i == *ic || norms_[i] == 0.0) continue;
      const double score = dot(set_.row(i), target) / (norms_[i] * tn);
      if (!best || score > best_score || (score == best_score && set_.words()[i] < set_.words()[*best])) {
        best = i;
        best_score = score;
      }
    }
    if (!best) return std::nullopt;
    return set_.words()[*best];
  }

 private:
  const EmbeddingSet& set_;
  OffsetSign sign_;
  std::vector<double> norms_;
};

inline std::optional<std::string> solve_analogy(const EmbeddingSet& set, std::string_view a, std::string_view b,
                                                std::string_view c, OffsetSign sign = OffsetSign::standard) {
  return AnalogySolver(set, sign).solve(a, b, c);
}

struct SectionScore {
  std::size_t correct = 0;
  std::size_t attempted = 0;
  std::size_t skipped = 0;

  std::optional<double> accuracy() const {
    if (attempted == 0) return std::nullopt;
    return static_cast<double>(correct) / static_cast<double>(attempted);
  }
};

struct AnalogyReport {
  SectionScore overall;
  std::vector<std::pair<std::string, SectionScore>> sections;

  json to_json() const {
    auto acc = [](const SectionScore& s) -> json {
      if (auto a = s.accuracy()) return *a;
      return nullptr;
    };
    json secs = json::object();
    for (const auto& [name, score] : sections) {
      secs[name] = {{"accuracy", acc(score)}, {"n", score.attempted}, {"skipped", score.skipped}};
    }
    return {{"overall", acc(overall)},
            {"attempted", overall.attempted},
            {"skipped", overall.skipped},
            {"correct", overall.correct},
            {"sections", secs}};
  }
};

/// Questions with any OOV word are skipped and left out of the
/// denominator.
inline AnalogyReport run_analogy_task(const EmbeddingSet& set, const AnalogyDataset& data,
                                      OffsetSign sign = OffsetSign::standard, unsigned threads = 0) {
  if (data.size() == 0) throw ValidationError("analogy dataset is empty");
  const AnalogySolver solver(set, sign);

  struct Item {
    std::size_t section;
    const AnalogyQuestion* question;
  };
  std::vector<Item> items;
  for (std::size_t s = 0; s < data.sections.size(); ++s) {
    for (const auto& q : data.sections[s].questions) items.push_back({s, &q});
  }
  // 0 = skipped, 1 = wrong, 2 = correct
  std::vector<char> outcome(items.size(), 0);
  parallel_for(items.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& w = items[i].question->words;
      if (!set.contains(w[0]) || !set.contains(w[1]) || !set.contains(w[2]) || !set.contains(w[3])) continue;
      auto answer = solver.solve(w[0], w[1], w[2]);
      outcome[i] = answer && *answer == w[3] ? 2 : 1;
    }
  });

  AnalogyReport report;
  std::map<std::size_t, SectionScore> per;
  for (std::size_t i = 0; i < items.size(); ++i) {
    auto& s = per[items[i].section];
    if (outcome[i] == 0) {
      ++s.skipped;
      continue;
    }
    ++s.attempted;
    if (outcome[i] == 2) ++s.correct;
  }
  for (std::size_t s = 0; s < data.sections.size(); ++s) {
    const auto& score = per[s];
    report.overall.correct += score.correct;
    report.overall.attempted += score.attempted;
    report.overall.skipped += score.skipped;
    report.sections.emplace_back(data.sections[s].name, score);
  }
  return report;
}

}  // namespace biaskit
