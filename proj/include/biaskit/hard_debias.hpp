#pragma once

#include <cmath>
#include <cstddef>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "biaskit/embedding_store.hpp"
#include "biaskit/error.hpp"
#include "biaskit/parallel.hpp"
#include "biaskit/subspace.hpp"
#include "biaskit/test_resources.hpp"

namespace biaskit {

struct HardDebiasReport {
  std::vector<WordPair> dropped_definitional;
  std::vector<WordPair> dropped_equalize;
  std::vector<WordPair> skipped_equalize;  // indistinguishable inside B
  std::vector<std::string> skipped_neutralize;  // residual is zero
  std::vector<WordPair> equalized;
  std::vector<double> explained_variance;
  std::size_t neutralized = 0;
  std::size_t k = 0;

  json to_json() const {
    return {{"k", k},
            {"explained_variance", explained_variance},
            {"neutralized_words", neutralized},
            {"equalized_pairs", equalized},
            {"dropped_definitional_pairs", dropped_definitional},
            {"dropped_equalize_pairs", dropped_equalize},
            {"skipped_equalize_pairs", skipped_equalize},
            {"skipped_neutralize_words", skipped_neutralize},
            {"input_normalized", true},
            {"output_normalized", true}};
  }
};

namespace detail {

inline std::vector<std::pair<VectorView, VectorView>> in_vocabulary_pairs(
    const EmbeddingSet& set, const std::vector<WordPair>& pairs, std::vector<WordPair>* dropped) {
  std::vector<std::pair<VectorView, VectorView>> out;
  for (const auto& [a, b] : pairs) {
    auto va = set.lookup(a);
    auto vb = set.lookup(b);
    if (va && vb) {
      out.emplace_back(*va, *vb);
    } else if (dropped) {
      dropped->emplace_back(a, b);
    }
  }
  return out;
}

}  // namespace detail

/// Gender subspace from definitional pairs. Pairs with an OOV member are
/// dropped whole (added to `dropped` when given); repeated words count
/// once per occurrence.
inline BiasSubspace fit_bias_subspace(const EmbeddingSet& set, const std::vector<WordPair>& pairs,
                                      std::size_t k, std::vector<WordPair>* dropped = nullptr) {
  if (k > set.dim()) {
    throw ValidationError("k = " + std::to_string(k) + " exceeds the dimension " + std::to_string(set.dim()));
  }
  auto present = detail::in_vocabulary_pairs(set, pairs, dropped);
  if (present.empty()) throw ValidationError("no definitional pair survives the vocabulary filter");
  return fit_pair_subspace(present, k);
}

/// Removes the subspace component of every word outside gender_specific
/// and renormalizes it. Words lying entirely inside the subspace are left
/// untouched and reported through `skipped`.
inline EmbeddingSet neutralize(const EmbeddingSet& set, const BiasSubspace& subspace,
                               const std::set<std::string>& gender_specific,
                               std::vector<std::string>* skipped = nullptr, unsigned threads = 0) {
  if (subspace.dim() != set.dim()) throw ValidationError("subspace and embeddings differ in dimension");
  const std::size_t d = set.dim();
  std::vector<double> out(set.matrix());
  std::vector<char> degenerate(set.size(), 0);
  parallel_for(set.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      if (gender_specific.count(set.words()[i])) continue;
      Vector residual = remove_projection(set.row(i), subspace);
      const double n = norm(residual);
      if (n < 1e-12) {
        degenerate[i] = 1;
        continue;
      }
      for (std::size_t j = 0; j < d; ++j) out[i * d + j] = residual[j] / n;
    }
  });
  if (skipped) {
    for (std::size_t i = 0; i < set.size(); ++i) {
      if (degenerate[i]) skipped->push_back(set.words()[i]);
    }
  }
  return set.with_matrix(std::move(out));
}

/// Places each pair symmetrically about the subspace: both members share
/// the off-subspace part of their mean and get opposite, equal-magnitude
/// subspace parts, with the magnitude chosen so unit inputs stay unit.
inline EmbeddingSet equalize(const EmbeddingSet& set, const BiasSubspace& subspace,
                             const std::vector<WordPair>& pairs, std::vector<WordPair>* dropped = nullptr,
                             std::vector<WordPair>* skipped = nullptr,
                             std::vector<WordPair>* processed = nullptr) {
  if (subspace.dim() != set.dim()) throw ValidationError("subspace and embeddings differ in dimension");
  const std::size_t d = set.dim();
  std::vector<double> out(set.matrix());
  auto row = [&](std::size_t i) { return VectorView(out.data() + i * d, d); };

  for (const auto& pair : pairs) {
    auto ia = set.find(pair.first);
    auto ib = set.find(pair.second);
    if (!ia || !ib) {
      if (dropped) dropped->push_back(pair);
      continue;
    }
    // Read the current (possibly already equalized) rows so repeated words
    // see earlier updates.
    const Vector a(row(*ia).begin(), row(*ia).end());
    const Vector b(row(*ib).begin(), row(*ib).end());
    Vector mu(d);
    for (std::size_t j = 0; j < d; ++j) mu[j] = (a[j] + b[j]) / 2.0;
    const Vector mu_b = project_onto(mu, subspace);
    Vector nu(d);
    for (std::size_t j = 0; j < d; ++j) nu[j] = mu[j] - mu_b[j];

    const Vector a_b = project_onto(a, subspace);
    const Vector b_b = project_onto(b, subspace);
    Vector da(d), db(d);
    for (std::size_t j = 0; j < d; ++j) {
      da[j] = a_b[j] - mu_b[j];
      db[j] = b_b[j] - mu_b[j];
    }
    const double na = norm(da);
    const double nb = norm(db);
    if (na < 1e-12 || nb < 1e-12) {
      if (skipped) skipped->push_back(pair);
      continue;
    }
    const double scale = std::sqrt(std::max(0.0, 1.0 - dot(nu, nu)));
    for (std::size_t j = 0; j < d; ++j) {
      out[*ia * d + j] = nu[j] + scale * da[j] / na;
      out[*ib * d + j] = nu[j] + scale * db[j] / nb;
    }
    if (processed) processed->push_back(pair);
  }
  return set.with_matrix(std::move(out));
}

struct HardDebiasResult {
  EmbeddingSet embeddings;
  BiasSubspace subspace;
  HardDebiasReport report;
};

/// normalize -> fit -> neutralize -> equalize.
inline HardDebiasResult hard_debias(const EmbeddingSet& set, const DebiasLists& lists, std::size_t k = 1,
                                    unsigned threads = 0) {
  lists.validate();
  HardDebiasResult result;
  result.report.k = k;
  const EmbeddingSet unit = normalize_all(set);
  result.subspace = fit_bias_subspace(unit, lists.definitional_pairs, k, &result.report.dropped_definitional);
  result.report.explained_variance = result.subspace.explained_variance;
  EmbeddingSet neutral =
      neutralize(unit, result.subspace, lists.gender_specific, &result.report.skipped_neutralize, threads);
  std::size_t touched = 0;
  for (const auto& w : unit.words()) {
    if (!lists.gender_specific.count(w)) ++touched;
  }
  result.report.neutralized = touched - result.report.skipped_neutralize.size();
  result.embeddings = equalize(neutral, result.subspace, lists.equalize_pairs, &result.report.dropped_equalize,
                               &result.report.skipped_equalize, &result.report.equalized);
  return result;
}

}  // namespace biaskit
