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

#include <gtest/gtest.h>

#include <cmath>

#include "clnr/augment.hpp"

namespace clnr {
namespace {

SparseMatrix<double> ring_with_chords(std::int64_t n, std::int64_t stride) {
  std::vector<Edge> edges;
  for (std::int64_t u = 0; u < n; ++u) {
    for (std::int64_t s = 1; s <= stride; ++s) {
      std::int64_t a = u, b = (u + s) % n;
      if (a > b) std::swap(a, b);
      edges.emplace_back(a, b);
    }
  }
  return adjacency_from_edges(n, edges);
}

GraphBundle tiny_bundle() {
  SbmConfig c;
  c.block_sizes = {30, 30};
  c.p_in = 0.3;
  c.p_out = 0.05;
  c.feature_dim = 8;
  c.seed = 2;
  return generate_sbm(c);
}

TEST(DropEdgesTest, ZeroRateKeepsEverything) {
  auto a = ring_with_chords(50, 3);
  EXPECT_EQ(drop_edges(a, 0.0, 1).indices, a.indices);
}

TEST(DropEdgesTest, FullRateEmptiesSupport) {
  auto a = ring_with_chords(50, 3);
  auto d = drop_edges(a, 1.0, 1);
  EXPECT_EQ(d.nnz(), 0);
  EXPECT_EQ(d.rows, 50);
}

TEST(DropEdgesTest, KeptCountWithinFourSigma) {
  auto a = ring_with_chords(2000, 5);  // 10000 undirected edges
  ASSERT_EQ(a.nnz(), 20000);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto d = drop_edges(a, 0.5, seed);
    EXPECT_NEAR(static_cast<double>(d.nnz() / 2), 5000.0, 4 * std::sqrt(10000 * 0.25));
  }
}

TEST(DropEdgesTest, SymmetricSubsetOfInput) {
  auto a = ring_with_chords(200, 4);
  auto d = drop_edges(a, 0.3, 9);
  EXPECT_TRUE(d.is_symmetric());
  for (std::int64_t r = 0; r < d.rows; ++r)
    for (std::int64_t k = d.offsets[r]; k < d.offsets[r + 1]; ++k) EXPECT_TRUE(a.has(r, d.indices[k]));
}

TEST(DropEdgesTest, BadRateThrows) {
  auto a = ring_with_chords(10, 1);
  EXPECT_THROW(drop_edges(a, 1.5, 1), ContractError);
  EXPECT_THROW(drop_edges(a, -0.1, 1), ContractError);
}

TEST(MaskFeaturesTest, EdgeRates) {
  Tensor<double> x = Tensor<double>::Random(20, 7);
  EXPECT_EQ(mask_features(x, 0.0, 1), x);
  EXPECT_EQ(mask_features(x, 1.0, 1), (Tensor<double>::Zero(20, 7)));
}

TEST(MaskFeaturesTest, ZeroedFractionWithinFourSigma) {
  Tensor<double> x = Tensor<double>::Ones(1000, 100);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto y = mask_features(x, 0.3, seed);
    const double n = 1e5, zeros = n - y.sum();
    EXPECT_NEAR(zeros / n, 0.3, 4 * std::sqrt(0.3 * 0.7 / n));
  }
}

TEST(MaskFeaturesTest, MasksPerElementNotPerColumn) {
  Tensor<double> x = Tensor<double>::Ones(200, 10);
  auto y = mask_features(x, 0.5, 4);
  for (Eigen::Index j = 0; j < 10; ++j) {
    const double kept = y.col(j).sum();
    EXPECT_GT(kept, 0.0);
    EXPECT_LT(kept, 200.0);
  }
}

TEST(MakeViewsTest, ZeroRatesGiveTheNormalizedSource) {
  auto g = tiny_bundle();
  AugmentConfig cfg{0.0, 0.0};
  auto views = make_views<double>(g, cfg, 3);
  const auto src = normalize_adjacency<double>(g.adjacency);
  for (const auto* v : {&views.first, &views.second}) {
    EXPECT_EQ(v->features, g.features);
    EXPECT_EQ(v->adjacency.matrix.indices, src.matrix.indices);
    EXPECT_EQ(v->adjacency.matrix.values, src.matrix.values);
  }
}

TEST(MakeViewsTest, ViewsDifferAndAreReproducible) {
  auto g = tiny_bundle();
  AugmentConfig cfg;
  auto a = make_views<double>(g, cfg, 11), b = make_views<double>(g, cfg, 11), c = make_views<double>(g, cfg, 12);
  EXPECT_NE(a.first.features, a.second.features);
  EXPECT_NE(a.first.adjacency.matrix.indices, a.second.adjacency.matrix.indices);
  EXPECT_EQ(a.first.features, b.first.features);
  EXPECT_EQ(a.second.adjacency.matrix.values, b.second.adjacency.matrix.values);
  EXPECT_NE(a.first.features, c.first.features);
  EXPECT_EQ(a.first.features.rows(), g.n_nodes);
  EXPECT_EQ(a.second.adjacency.matrix.rows, g.n_nodes);
}

TEST(AugmentConfigTest, Validation) {
  EXPECT_THROW((AugmentConfig{1.2, 0.1}.validate()), ConfigError);
  EXPECT_THROW((AugmentConfig{0.1, -0.2}.validate()), ConfigError);
  EXPECT_NO_THROW((AugmentConfig{1.0, 0.0}.validate()));
}

}  // namespace
}  // namespace clnr
