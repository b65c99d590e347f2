// Copyright 2026 The CRUM Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "crum/error.hpp"
#include "crum/graph_embedding.hpp"
#include "crum/oracle.hpp"
#include "test_util.hpp"

namespace crum::gat {
namespace {

GatConfig small_config(Index d, Index n_max = 6) {
  GatConfig c;
  c.input_dim = d;
  c.n_max = n_max;
  c.layers = 2;
  c.heads = 2;
  c.width = 8;
  return c;
}

ParameterStore init(const GraphEmbedding& g, std::uint64_t seed) {
  ParameterStore store;
  Rng rng(seed);
  g.add_parameters(store, rng);
  return store;
}

TEST(PositionEncoding, OneHot) {
  const PositionEncoding enc(10);
  const RowVector v = enc.encode(3);
  EXPECT_EQ(v.size(), 10);
  EXPECT_EQ(v.sum(), 1.0);
  EXPECT_EQ(v(2), 1.0);
  EXPECT_THROW(enc.encode(11), DomainError);
  EXPECT_THROW(enc.encode(0), DomainError);
}

TEST(AttentionLayer, RowsAreDistributions) {
  const GraphEmbedding g(small_config(4));
  const auto store = init(g, 1);
  const Matrix x = testing::random_matrix(5, 4, 2);
  GatCache cache;
  g.embed(store, x, Permutation(std::vector<int>{2, 4, 1, 5, 3}), &cache);
  for (const auto& layer : cache.layers) {
    for (const auto& a : layer.attention) {
      EXPECT_GE(a.minCoeff(), 0.0);
      for (Index i = 0; i < a.rows(); ++i) EXPECT_NEAR(a.row(i).sum(), 1.0, 1e-12);
    }
  }
}

TEST(AttentionLayer, EqualLogitsGiveUniformAttention) {
  const GraphEmbedding g(small_config(3));
  auto store = init(g, 3);
  for (auto& e : store.entries()) {
    if (e.name.ends_with("a_src") || e.name.ends_with("a_dst")) e.value.setZero();
  }
  GatLayerCache cache;
  const PositionEncoding enc(6);
  g.attention_layer(store, 0, testing::random_matrix(4, 3, 4),
                    enc.encode(Permutation::identity(4)), &cache);
  for (const auto& a : cache.attention) {
    EXPECT_TRUE(a.isApprox(Matrix::Constant(4, 4, 0.25), 1e-15));
  }
}

TEST(AttentionLayer, SingleNodeAttendsToItself) {
  const GraphEmbedding g(small_config(3));
  const auto store = init(g, 5);
  const PositionEncoding enc(6);
  const Matrix x = testing::random_matrix(1, 3, 6);
  const Matrix p = enc.encode(Permutation::identity(1));
  GatLayerCache cache;
  const Matrix out = g.attention_layer(store, 0, x, p, &cache);
  Matrix input(1, 9);
  input << x, p;
  for (int l = 0; l < 2; ++l) {
    EXPECT_DOUBLE_EQ(cache.attention[static_cast<std::size_t>(l)](0, 0), 1.0);
    const Matrix z = input * store.at(GraphEmbedding::param_name(0, l, "w"));
    EXPECT_TRUE(out.middleCols(4 * l, 4).isApprox(z.array().tanh().matrix(), 1e-14));
  }
}

TEST(EmbedRequest, ZeroLayersIsIdentity) {
  GatConfig c = small_config(3);
  c.layers = 0;
  const GraphEmbedding g(c);
  const Matrix x = testing::random_matrix(4, 3, 7);
  EXPECT_EQ(g.embed(ParameterStore{}, x, Permutation::identity(4)), x);
}

TEST(EmbedRequest, PublishedShape) {
  GatConfig c;
  c.input_dim = 20;
  c.n_max = 10;
  const GraphEmbedding g(c);
  const Matrix h = g.embed(init(g, 1), testing::random_matrix(10, 20, 1, 0, 1),
                           Permutation::identity(10));
  EXPECT_EQ(h.rows(), 10);
  EXPECT_EQ(h.cols(), 64);
  EXPECT_EQ(c.heads * (c.width / c.heads), 64);
}

TEST(EmbedRequest, StorageOrderEquivariance) {
  const GraphEmbedding g(small_config(4));
  const auto store = init(g, 8);
  const Matrix x = testing::random_matrix(5, 4, 9);
  const Permutation pos(std::vector<int>{3, 1, 5, 2, 4});
  const Matrix h = g.embed(store, x, pos);
  const std::vector<Index> perm = {4, 2, 0, 3, 1};
  Matrix xp(5, 4);
  std::vector<int> pp;
  for (Index k = 0; k < 5; ++k) {
    xp.row(k) = x.row(perm[static_cast<std::size_t>(k)]);
    pp.push_back(pos.position(static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])));
  }
  const Matrix hp = g.embed(store, xp, Permutation(pp));
  for (Index k = 0; k < 5; ++k) {
    EXPECT_LT((hp.row(k) - h.row(perm[static_cast<std::size_t>(k)])).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(EmbedRequest, PositionSensitive) {
  const GraphEmbedding g(small_config(3));
  const auto store = init(g, 10);
  Matrix x(2, 3);
  x.row(0) << 0.2, 0.5, 0.7;
  x.row(1) = x.row(0);
  const Matrix h = g.embed(store, x, Permutation::identity(2));
  EXPECT_GT((h.row(0) - h.row(1)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(EmbedRequest, GradientMatchesFiniteDifferences) {
  const GraphEmbedding g(small_config(3, 4));
  const auto store = init(g, 11);
  const Matrix x = testing::random_matrix(3, 3, 12);
  const Permutation pos(std::vector<int>{2, 3, 1});
  const Matrix r = testing::random_matrix(3, 8, 13);
  const auto loss = [&](const ParameterStore& p, ParameterStore* grads) {
    GatCache cache;
    const Matrix h = g.embed(p, x, pos, grads ? &cache : nullptr);
    if (grads) g.backward(p, cache, r, *grads);
    return h.cwiseProduct(r).sum();
  };
  EXPECT_LT(oracle::finite_difference_gradcheck(loss, store, 1e-5).max_relative_error, 1e-4);
}

TEST(EmbedRequest, ShapeErrors) {
  const GraphEmbedding g(small_config(3));
  const auto store = init(g, 1);
  EXPECT_THROW(g.embed(store, Matrix::Zero(2, 4), Permutation::identity(2)), ConfigError);
  GatConfig bad = small_config(3);
  bad.heads = 3;
  EXPECT_THROW(GraphEmbedding{bad}, ConfigError);
  Matrix nan = Matrix::Zero(2, 3);
  nan(0, 0) = std::nan("");
  EXPECT_THROW(g.embed(store, nan, Permutation::identity(2)), NumericError);
}

}  // namespace
}  // namespace crum::gat
