#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "biaskit/embedding_store.hpp"
#include "biaskit/error.hpp"
#include "biaskit/parallel.hpp"
#include "biaskit/subspace.hpp"

namespace biaskit {

using ScoreMap = std::map<std::string, double>;

struct ScoringOptions {
  /// Score with unit-normalized vectors instead of raw dot products.
  bool normalize = false;
  unsigned threads = 0;
};

/// w . v(male) - w . v(female) for every word except the anchors and the
/// exclusions.
inline ScoreMap gender_direction_scores(const EmbeddingSet& set, const std::string& male_anchor,
                                        const std::string& female_anchor,
                                        const std::set<std::string>& exclusions,
                                        const ScoringOptions& options = {}) {
  auto im = set.find(male_anchor);
  auto iff = set.find(female_anchor);
  if (!im) throw ValidationError("anchor '" + male_anchor + "' not in vocabulary");
  if (!iff) throw ValidationError("anchor '" + female_anchor + "' not in vocabulary");

  auto unit = [&](VectorView v) {
    Vector out(v.begin(), v.end());
    if (options.normalize) {
      const double n = norm(v);
      if (n == 0.0) throw DegenerateError("zero-norm vector in normalized scoring");
      for (double& c : out) c /= n;
    }
    return out;
  };
  const Vector male = unit(set.row(*im));
  const Vector female = unit(set.row(*iff));

  std::vector<double> scores(set.size(), 0.0);
  std::vector<char> keep(set.size(), 0);
  parallel_for(set.size(), options.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& w = set.words()[i];
      if (i == *im || i == *iff || exclusions.count(w)) continue;
      if (options.normalize) {
        const Vector u = unit(set.row(i));
        scores[i] = dot(u, male) - dot(u, female);
      } else {
        scores[i] = dot(set.row(i), male) - dot(set.row(i), female);
      }
      keep[i] = 1;
    }
  });
  ScoreMap out;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (keep[i]) out.emplace(set.words()[i], scores[i]);
  }
  return out;
}

struct TopBiased {
  std::vector<std::string> male;
  std::vector<std::string> female;
};

/// The k highest and k lowest scores; ties go to the byte-wise smaller
/// token. The two sets never overlap.
inline TopBiased top_biased(const ScoreMap& scores, std::size_t k) {
  if (k == 0) throw ValidationError("k must be positive");
  if (scores.size() < 2 * k) {
    throw ValidationError("vocabulary too small: " + std::to_string(scores.size()) + " scored words, need " +
                          std::to_string(2 * k));
  }
  std::vector<std::pair<std::string, double>> entries(scores.begin(), scores.end());
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& x, const auto& y) { return x.second > y.second; });
  TopBiased top;
  std::set<std::string> taken;
  for (std::size_t i = 0; i < k; ++i) {
    top.male.push_back(entries[i].first);
    taken.insert(entries[i].first);
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& x, const auto& y) { return x.second < y.second; });
  for (const auto& [token, score] : entries) {
    if (top.female.size() == k) break;
    if (!taken.count(token)) top.female.push_back(token);
  }
  return top;
}

struct KMeansResult {
  std::vector<int> labels;
  std::size_t iterations = 0;
  double inertia = 0.0;  ///< within-cluster sum of squares
};

namespace detail {

inline double squared_distance(VectorView a, VectorView b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    s += t * t;
  }
  return s;
}

}  // namespace detail

/// Deterministic 2-means. Centroids start at the farthest pair of points
/// (lowest index pair on ties); Lloyd iterations run to an assignment
/// fixpoint or 300 rounds. An emptied cluster takes the point farthest from
/// its centroid.
inline KMeansResult kmeans2(const std::vector<VectorView>& points, std::size_t max_iterations = 300) {
  const std::size_t n = points.size();
  if (n < 2) throw ValidationError("kmeans2 needs at least two points");
  const std::size_t d = points.front().size();

  double best = -1.0;
  std::size_t seed_a = 0, seed_b = 1;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dist = detail::squared_distance(points[i], points[j]);
      if (dist > best) {
        best = dist;
        seed_a = i;
        seed_b = j;
      }
    }
  }
  if (best <= 0.0) throw DegenerateError("kmeans2: all input vectors are identical");

  std::array<Vector, 2> centroid = {Vector(points[seed_a].begin(), points[seed_a].end()),
                                    Vector(points[seed_b].begin(), points[seed_b].end())};
  KMeansResult result;
  result.labels.assign(n, -1);
  for (std::size_t iter = 1; iter <= max_iterations; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const double d0 = detail::squared_distance(points[i], centroid[0]);
      const double d1 = detail::squared_distance(points[i], centroid[1]);
      const int label = d1 < d0 ? 1 : 0;
      if (label != result.labels[i]) {
        result.labels[i] = label;
        changed = true;
      }
    }
    for (int c = 0; c < 2; ++c) {
      if (std::count(result.labels.begin(), result.labels.end(), c) != 0) continue;
      std::size_t far = 0;
      double far_dist = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double dist = detail::squared_distance(points[i], centroid[result.labels[i]]);
        if (dist > far_dist) {
          far_dist = dist;
          far = i;
        }
      }
      result.labels[far] = c;
      changed = true;
    }
    for (int c = 0; c < 2; ++c) {
      Vector sum(d, 0.0);
      std::size_t count = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (result.labels[i] != c) continue;
        for (std::size_t j = 0; j < d; ++j) sum[j] += points[i][j];
        ++count;
      }
      for (double& s : sum) s /= static_cast<double>(count);
      centroid[c] = std::move(sum);
    }
    result.iterations = iter;
    if (!changed) break;
  }
  for (std::size_t i = 0; i < n; ++i) {
    result.inertia += detail::squared_distance(points[i], centroid[result.labels[i]]);
  }
  return result;
}

struct SelectedWord {
  std::string token;
  double score = 0.0;
  int truth = 0;  ///< 0 = male pole, 1 = female pole
  int predicted = 0;
};

struct ClusterAuditResult {
  double accuracy = 0.5;
  double raw_accuracy = 0.5;
  std::size_t k = 0;
  std::string male_anchor;
  std::string female_anchor;
  bool normalized = false;
  bool reference_selection = false;
  std::vector<SelectedWord> selected;
  std::size_t iterations = 0;

  json to_json() const {
    json sel = json::array();
    for (const auto& w : selected) {
      sel.push_back({{"token", w.token}, {"score", w.score}, {"truth", w.truth}, {"predicted", w.predicted}});
    }
    return {{"accuracy", accuracy},
            {"raw_accuracy", raw_accuracy},
            {"k", k},
            {"anchors", {male_anchor, female_anchor}},
            {"normalized", normalized},
            {"selection", reference_selection ? "reference" : "audited"},
            {"kmeans", {{"init", "farthest-pair"}, {"max_iterations", 300}, {"iterations", iterations},
                        {"distance", "euclidean"}}},
            {"selected", sel}};
  }
};

struct AuditOptions {
  std::string male_anchor = "man";
  std::string female_anchor = "vrouw";
  std::size_t k = 500;
  std::set<std::string> exclusions;
  /// Also runs KMeans on unit-normalized vectors.
  bool normalize = false;
  unsigned threads = 0;
};

/// Clustering-accuracy audit. Words are chosen by gender-direction score on
/// `selection` (defaults to `set` itself) and clustered using their vectors
/// in `set`; passing the pre-debias embedding as `selection` follows a
/// fixed word sample through debiasing.
inline ClusterAuditResult run_cluster_audit(const EmbeddingSet& set, const AuditOptions& options,
                                            const EmbeddingSet* selection = nullptr) {
  const EmbeddingSet& chooser = selection ? *selection : set;
  const ScoreMap scores = gender_direction_scores(chooser, options.male_anchor, options.female_anchor,
                                                  options.exclusions, {options.normalize, options.threads});
  ScoreMap usable;
  for (const auto& [token, score] : scores) {
    if (set.contains(token)) usable.emplace(token, score);
  }
  const TopBiased top = top_biased(usable, options.k);

  ClusterAuditResult result;
  result.k = options.k;
  result.male_anchor = options.male_anchor;
  result.female_anchor = options.female_anchor;
  result.normalized = options.normalize;
  result.reference_selection = selection != nullptr;
  for (const auto& t : top.male) result.selected.push_back({t, usable.at(t), 0, 0});
  for (const auto& t : top.female) result.selected.push_back({t, usable.at(t), 1, 0});
  // Canonical order makes the clustering independent of vocabulary order.
  std::sort(result.selected.begin(), result.selected.end(),
            [](const auto& a, const auto& b) { return a.token < b.token; });

  std::vector<Vector> storage;
  std::vector<VectorView> points;
  storage.reserve(result.selected.size());
  for (const auto& w : result.selected) {
    auto v = set.vector(w.token);
    Vector p(v.begin(), v.end());
    if (options.normalize) {
      const double n = norm(p);
      if (n == 0.0) throw DegenerateError("zero-norm vector for '" + w.token + "'");
      for (double& c : p) c /= n;
    }
    storage.push_back(std::move(p));
  }
  for (const auto& p : storage) points.emplace_back(p);
  const KMeansResult km = kmeans2(points);
  result.iterations = km.iterations;

  std::size_t correct = 0;
  for (std::size_t i = 0; i < result.selected.size(); ++i) {
    result.selected[i].predicted = km.labels[i];
    if (result.selected[i].predicted == result.selected[i].truth) ++correct;
  }
  result.raw_accuracy = static_cast<double>(correct) / static_cast<double>(result.selected.size());
  result.accuracy = std::max(result.raw_accuracy, 1.0 - result.raw_accuracy);
  return result;
}

/// Plot data for external scatter plots: token, score, first two principal
/// coordinates of the selected vectors, truth, predicted.
inline std::string cluster_plot_tsv(const EmbeddingSet& set, const ClusterAuditResult& audit) {
  const std::size_t n = audit.selected.size();
  const std::size_t d = set.dim();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    auto v = set.vector(audit.selected[i].token);
    const double scale = audit.normalized ? norm(v) : 1.0;
    for (std::size_t j = 0; j < d; ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[j] / (scale == 0.0 ? 1.0 : scale);
    }
  }
  Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  const std::size_t axes_count = std::min<std::size_t>(2, d);
  PrincipalAxes axes = principal_axes(x, axes_count);
  for (auto& a : axes.axes) canonicalize_sign(a, {});

  std::ostringstream out;
  out << "token\tscore\tpc1\tpc2\ttruth\tpredicted\n";
  for (std::size_t i = 0; i < n; ++i) {
    double coords[2] = {0.0, 0.0};
    for (std::size_t a = 0; a < axes_count; ++a) {
      for (std::size_t j = 0; j < d; ++j) {
        coords[a] += x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * axes.axes[a][j];
      }
    }
    const auto& w = audit.selected[i];
    out << w.token << '\t' << detail::format_double(w.score) << '\t' << detail::format_double(coords[0]) << '\t'
        << detail::format_double(coords[1]) << '\t' << w.truth << '\t' << w.predicted << '\n';
  }
  return out.str();
}

}  // namespace biaskit
