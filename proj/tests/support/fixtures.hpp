#pragma once

// Synthetic embeddings with a known planted structure.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "biaskit/embedding_store.hpp"
#include "biaskit/test_resources.hpp"

namespace fixture {

using biaskit::DebiasLists;
using biaskit::EmbeddingSet;
using biaskit::TestSpec;

/// Box-Muller on top of mt19937_64 so fixtures are identical across
/// standard libraries.
class Gauss {
 public:
  explicit Gauss(std::uint64_t seed) : rng_(seed) {}

  double uniform() { return (static_cast<double>(rng_() >> 11) + 0.5) * 0x1.0p-53; }

  double operator()(double sd = 1.0) {
    if (have_spare_) {
      have_spare_ = false;
      return spare_ * sd;
    }
    const double u = uniform(), v = uniform();
    const double r = std::sqrt(-2.0 * std::log(u));
    spare_ = r * std::sin(2.0 * M_PI * v);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * v) * sd;
  }

  std::vector<double> vec(std::size_t dim, double sd = 1.0) {
    std::vector<double> v(dim);
    for (double& c : v) c = (*this)(sd);
    return v;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

inline std::string label(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%03zu", prefix, i);
  return buf;
}

struct Builder {
  std::vector<std::string> words;
  std::vector<double> matrix;
  std::size_t dim;

  explicit Builder(std::size_t d) : dim(d) {}

  void add(std::string w, const std::vector<double>& v) {
    words.push_back(std::move(w));
    matrix.insert(matrix.end(), v.begin(), v.end());
  }

  EmbeddingSet build() const { return EmbeddingSet(words, matrix, dim); }
};

inline std::vector<std::string> names(const char* prefix, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(label(prefix, i));
  return out;
}

struct Suite {
  EmbeddingSet set;
  TestSpec spec;
  DebiasLists lists;
};

/// Gender along axis 0. Male/female targets sit at +-1 on it, the two
/// attribute lists lean +-`lean`, definitional pairs differ only along it
/// (plus jitter), and filler words are random.
inline Suite planted_gender_suite(std::uint64_t seed, std::size_t total = 200, std::size_t dim = 10,
                                  double lean = 0.5) {
  Gauss g(seed);
  Builder b(dim);
  const std::size_t per_list = 8, n_def = 10;
  auto offaxis = [&](double first, double sd) {
    auto v = g.vec(dim, sd);
    v[0] = first;
    return v;
  };
  Suite s;
  s.spec.test_id = "planted";
  s.spec.targets_1 = {"male", names("m", per_list)};
  s.spec.targets_2 = {"female", names("f", per_list)};
  s.spec.attributes_1 = {"career", names("c", per_list)};
  s.spec.attributes_2 = {"family", names("h", per_list)};
  for (std::size_t i = 0; i < per_list; ++i) b.add(label("m", i), offaxis(1.0 + g(0.1), 0.35));
  for (std::size_t i = 0; i < per_list; ++i) b.add(label("f", i), offaxis(-1.0 + g(0.1), 0.35));
  for (std::size_t i = 0; i < per_list; ++i) b.add(label("c", i), offaxis(lean + g(0.1), 0.35));
  for (std::size_t i = 0; i < per_list; ++i) b.add(label("h", i), offaxis(-lean + g(0.1), 0.35));
  for (std::size_t i = 0; i < n_def; ++i) {
    const auto shared = g.vec(dim, 0.35);
    auto male = shared, female = shared;
    male[0] = 1.0;
    female[0] = -1.0;
    for (std::size_t j = 1; j < dim; ++j) {
      male[j] += g(0.02);
      female[j] += g(0.02);
    }
    b.add(label("dm", i), male);
    b.add(label("df", i), female);
    s.lists.definitional_pairs.emplace_back(label("dm", i), label("df", i));
  }
  for (std::size_t i = 0; b.words.size() < total; ++i) b.add(label("w", i), offaxis(g(0.3), 0.35));
  for (std::size_t i = 0; i < per_list; ++i) s.lists.equalize_pairs.emplace_back(label("m", i), label("f", i));
  for (const auto* pairs : {&s.lists.definitional_pairs, &s.lists.equalize_pairs}) {
    for (const auto& [x, y] : *pairs) {
      s.lists.gender_specific.insert(x);
      s.lists.gender_specific.insert(y);
    }
  }
  s.set = b.build();
  return s;
}

/// Like the planted suite, but each biased word also carries +-`echo` on
/// axis 1, a correlate of gender that a single-direction projection leaves
/// behind. Anchors are "man" / "vrouw".
inline Suite clustered_gender_suite(std::uint64_t seed, std::size_t per_pole = 60, std::size_t filler = 300,
                                    std::size_t dim = 10, double echo = 0.8) {
  Gauss g(seed);
  Builder b(dim);
  Suite s;
  const std::size_t per_list = 8, n_def = 10;
  auto pole_word = [&](double sign) {
    auto v = g.vec(dim, 0.15);
    v[0] = sign * (0.3 + 0.3 * g.uniform());
    v[1] = sign * echo + g(0.1);
    return v;
  };
  for (std::size_t i = 0; i < n_def; ++i) {
    const auto shared = g.vec(dim, 0.35);
    auto male = shared, female = shared;
    male[0] = 1.0;
    female[0] = -1.0;
    for (std::size_t j = 1; j < dim; ++j) {
      male[j] += g(0.02);
      female[j] += g(0.02);
    }
    const std::string mw = i == 0 ? "man" : label("dm", i);
    const std::string fw = i == 0 ? "vrouw" : label("df", i);
    b.add(mw, male);
    b.add(fw, female);
    s.lists.definitional_pairs.emplace_back(mw, fw);
  }
  for (std::size_t i = 0; i < per_list; ++i) {
    auto v = g.vec(dim, 0.35);
    v[0] = 1.0 + g(0.1);
    b.add(label("m", i), v);
  }
  for (std::size_t i = 0; i < per_list; ++i) {
    auto v = g.vec(dim, 0.35);
    v[0] = -1.0 + g(0.1);
    b.add(label("f", i), v);
  }
  for (std::size_t i = 0; i < per_pole; ++i) b.add(label("bm", i), pole_word(1.0));
  for (std::size_t i = 0; i < per_pole; ++i) b.add(label("bf", i), pole_word(-1.0));
  for (std::size_t i = 0; i < filler; ++i) {
    auto v = g.vec(dim, 0.35);
    v[0] = g(0.05);
    b.add(label("w", i), v);
  }
  for (std::size_t i = 0; i < per_list; ++i) s.lists.equalize_pairs.emplace_back(label("m", i), label("f", i));
  for (const auto* pairs : {&s.lists.definitional_pairs, &s.lists.equalize_pairs}) {
    for (const auto& [x, y] : *pairs) {
      s.lists.gender_specific.insert(x);
      s.lists.gender_specific.insert(y);
    }
  }
  s.spec.test_id = "clustered";
  s.spec.targets_1 = {"male", names("m", per_list)};
  s.spec.targets_2 = {"female", names("f", per_list)};
  s.spec.attributes_1 = {"male-leaning", names("bm", per_list)};
  s.spec.attributes_2 = {"female-leaning", names("bf", per_list)};
  s.set = b.build();
  return s;
}

/// Isotropic Gaussian vocabulary containing the anchors "man" and "vrouw".
inline EmbeddingSet isotropic_set(std::uint64_t seed, std::size_t n, std::size_t dim) {
  Gauss g(seed);
  Builder b(dim);
  b.add("man", g.vec(dim));
  b.add("vrouw", g.vec(dim));
  for (std::size_t i = 0; b.words.size() < n; ++i) b.add(label("w", i), g.vec(dim));
  return b.build();
}

/// n independent standard-normal vectors.
inline std::vector<std::vector<double>> random_vectors(Gauss& g, std::size_t n, std::size_t dim) {
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(g.vec(dim));
  return out;
}

}  // namespace fixture
