#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <json.hpp>

#include "biaskit/embedding_store.hpp"
#include "biaskit/error.hpp"
#include "biaskit/test_resources.hpp"

namespace biaskit {

/// k orthonormal bias directions, plus the per-pair means they were fitted
/// from (empty when loaded from a file).
struct BiasSubspace {
  static constexpr double kOrthoTolerance = 1e-8;

  std::vector<Vector> basis;
  std::vector<Vector> pair_means;
  std::vector<double> explained_variance;

  std::size_t k() const noexcept { return basis.size(); }
  std::size_t dim() const noexcept { return basis.empty() ? 0 : basis.front().size(); }

  void validate() const {
    if (basis.empty()) throw ValidationError("bias subspace has no basis vectors");
    for (std::size_t i = 0; i < basis.size(); ++i) {
      if (basis[i].size() != dim()) throw ValidationError("ragged bias subspace basis");
      for (std::size_t j = i; j < basis.size(); ++j) {
        const double expected = i == j ? 1.0 : 0.0;
        if (std::abs(dot(basis[i], basis[j]) - expected) > kOrthoTolerance) {
          throw ValidationError("bias subspace basis is not orthonormal");
        }
      }
    }
    if (explained_variance.size() != basis.size()) {
      throw ValidationError("explained_variance must have one entry per basis vector");
    }
  }
};

/// Sum over the basis of (v . b) b.
inline Vector project_onto(VectorView v, const BiasSubspace& subspace) {
  if (v.size() != subspace.dim()) {
    throw ValidationError("dimension mismatch: vector has " + std::to_string(v.size()) +
                          ", subspace has " + std::to_string(subspace.dim()));
  }
  Vector out(v.size(), 0.0);
  for (const auto& b : subspace.basis) {
    const double c = dot(v, b);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += c * b[i];
  }
  return out;
}

/// v minus its projection onto the subspace.
inline Vector remove_projection(VectorView v, const BiasSubspace& subspace) {
  Vector out(v.begin(), v.end());
  const Vector p = project_onto(v, subspace);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= p[i];
  return out;
}

/// Leading right singular directions of a row-sample matrix, with
/// explained variance sigma^2 / (rows - 1). Signs are left to the caller.
struct PrincipalAxes {
  std::vector<Vector> axes;
  std::vector<double> explained_variance;
};

inline PrincipalAxes principal_axes(const Eigen::MatrixXd& centered, std::size_t k) {
  const auto rows = static_cast<std::size_t>(centered.rows());
  const auto cols = static_cast<std::size_t>(centered.cols());
  if (k == 0) throw ValidationError("k must be positive");
  if (k > cols) {
    throw ValidationError("k = " + std::to_string(k) + " exceeds the dimension " + std::to_string(cols));
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeFullV);
  const Eigen::VectorXd& sigma = svd.singularValues();
  const Eigen::MatrixXd& v = svd.matrixV();
  const double scale = rows > 1 ? static_cast<double>(rows - 1) : 1.0;
  PrincipalAxes out;
  for (std::size_t j = 0; j < k; ++j) {
    Vector axis(cols);
    for (std::size_t i = 0; i < cols; ++i) axis[i] = v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    out.axes.push_back(std::move(axis));
    const double s = j < static_cast<std::size_t>(sigma.size()) ? sigma(static_cast<Eigen::Index>(j)) : 0.0;
    out.explained_variance.push_back(s * s / scale);
  }
  return out;
}

/// Flips `axis` so axis . reference >= 0; when the reference is numerically
/// orthogonal, makes the first nonzero component positive instead.
inline void canonicalize_sign(Vector& axis, VectorView reference) {
  constexpr double kEps = 1e-12;
  double s = reference.empty() ? 0.0 : dot(axis, reference);
  if (std::abs(s) <= kEps) {
    s = 0.0;
    for (double c : axis) {
      if (std::abs(c) > kEps) {
        s = c;
        break;
      }
    }
  }
  if (s < 0.0) {
    for (double& c : axis) c = -c;
  }
}

/// PCA over pair-centered vectors: each pair (male, female) is centered on
/// its own mean and both centered members become rows. The basis is signed
/// so b . (male_1 - female_1) >= 0 for the first pair.
inline BiasSubspace fit_pair_subspace(const std::vector<std::pair<VectorView, VectorView>>& pairs,
                                      std::size_t k) {
  if (pairs.empty()) throw ValidationError("no complete pairs to fit a bias subspace");
  const std::size_t d = pairs.front().first.size();
  if (k == 0) throw ValidationError("k must be positive");
  if (k > d) throw ValidationError("k = " + std::to_string(k) + " exceeds the dimension " + std::to_string(d));

  BiasSubspace subspace;
  Eigen::MatrixXd centered(static_cast<Eigen::Index>(2 * pairs.size()), static_cast<Eigen::Index>(d));
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto& [male, female] = pairs[p];
    if (male.size() != d || female.size() != d) throw ValidationError("pair vectors differ in dimension");
    Vector mean(d);
    for (std::size_t i = 0; i < d; ++i) {
      mean[i] = (male[i] + female[i]) / 2.0;
      centered(static_cast<Eigen::Index>(2 * p), static_cast<Eigen::Index>(i)) = male[i] - mean[i];
      centered(static_cast<Eigen::Index>(2 * p + 1), static_cast<Eigen::Index>(i)) = female[i] - mean[i];
    }
    subspace.pair_means.push_back(std::move(mean));
  }
  if (centered.norm() <= 1e-12) {
    throw DegenerateError("zero centered matrix: every pair has identical members");
  }

  PrincipalAxes axes = principal_axes(centered, k);
  Vector reference(d);
  for (std::size_t i = 0; i < d; ++i) reference[i] = pairs.front().first[i] - pairs.front().second[i];
  for (auto& axis : axes.axes) canonicalize_sign(axis, reference);
  subspace.basis = std::move(axes.axes);
  subspace.explained_variance = std::move(axes.explained_variance);
  return subspace;
}

inline json to_json(const BiasSubspace& subspace) {
  return {{"k", subspace.k()},
          {"dim", subspace.dim()},
          {"basis", subspace.basis},
          {"explained_variance", subspace.explained_variance},
          {"sign_convention", "male-minus-female"}};
}

inline void save_subspace(const BiasSubspace& subspace, const std::string& path) {
  detail::write_text_file(path, to_json(subspace).dump(2) + "\n");
}

inline BiasSubspace load_subspace(const std::string& path) {
  const json j = detail::read_json_file(path);
  BiasSubspace subspace;
  try {
    subspace.basis = j.at("basis").get<std::vector<Vector>>();
    subspace.explained_variance = j.at("explained_variance").get<std::vector<double>>();
    if (j.at("k").get<std::size_t>() != subspace.basis.size() ||
        (!subspace.basis.empty() && j.at("dim").get<std::size_t>() != subspace.basis.front().size())) {
      throw FormatError(path + ": k/dim disagree with the basis");
    }
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  subspace.validate();
  return subspace;
}

}  // namespace biaskit
