// Copyright 2026 The CLNR Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "clnr/errors.hpp"
#include "clnr/graph.hpp"
#include "clnr/rng.hpp"
#include "clnr/tensor.hpp"

namespace clnr {

struct AugmentConfig {
  double edge_drop = 0.5;     // p_e
  double feature_mask = 0.2;  // p_f

  void validate() const {
    if (!(edge_drop >= 0.0 && edge_drop <= 1.0))
      throw ConfigError("edge drop rate must be in [0, 1]");
    if (!(feature_mask >= 0.0 && feature_mask <= 1.0))
      throw ConfigError("feature mask rate must be in [0, 1]");
  }
};

template <class T>
struct View {
  Tensor<T> features;
  NormalizedAdjacency<T> adjacency;
};

template <class T>
struct ViewPair {
  View<T> first;
  View<T> second;
};

/// One Bernoulli(p_e) per undirected edge; both directions share its fate.
inline SparseMatrix<double> drop_edges(const SparseMatrix<double>& a, double p_e,
                                       std::uint64_t seed) {
  if (!(p_e >= 0.0 && p_e <= 1.0)) throw ContractError("drop_edges: rate must be in [0, 1]");
  if (p_e == 0.0) return a;
  Engine eng = make_engine(seed);
  std::vector<std::tuple<std::int64_t, std::int64_t, double>> kept;
  for (std::int64_t r = 0; r < a.rows; ++r)
    for (std::int64_t k = a.offsets[r]; k < a.offsets[r + 1]; ++k) {
      const std::int64_t c = a.indices[k];
      if (c <= r) continue;
      if (bernoulli(eng, p_e)) continue;
      kept.emplace_back(r, c, a.values[k]);
      kept.emplace_back(c, r, a.values[k]);
    }
  return SparseMatrix<double>::from_triplets(a.rows, a.cols, std::move(kept));
}

/// Zeroes each entry independently with probability p_f.
template <class T>
Tensor<T> mask_features(const Tensor<T>& x, double p_f, std::uint64_t seed) {
  if (!(p_f >= 0.0 && p_f <= 1.0)) throw ContractError("mask_features: rate must be in [0, 1]");
  Tensor<T> out = x;
  if (p_f == 0.0) return out;
  Engine eng = make_engine(seed);
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j)
      if (bernoulli(eng, p_f)) out(i, j) = T(0);
  return out;
}

/// Two independent augmented views, each with its own derived seeds.
/// `features` is the bundle's feature matrix already cast to T.
template <class T>
ViewPair<T> make_views(const GraphBundle& g, const Tensor<T>& features, const AugmentConfig& cfg,
                       std::uint64_t seed) {
  cfg.validate();
  auto one = [&](std::uint64_t which) {
    View<T> v;
    v.features = mask_features(features, cfg.feature_mask, derive_seed(seed, "mask", which));
    v.adjacency =
        normalize_adjacency<T>(drop_edges(g.adjacency, cfg.edge_drop, derive_seed(seed, "drop", which)));
    return v;
  };
  return ViewPair<T>{one(1), one(2)};
}

template <class T>
ViewPair<T> make_views(const GraphBundle& g, const AugmentConfig& cfg, std::uint64_t seed) {
  return make_views<T>(g, g.features.cast<T>(), cfg, seed);
}

}  // namespace clnr
