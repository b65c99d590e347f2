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
#include <limits>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "crum/click_model.hpp"
#include "crum/error.hpp"
#include "crum/evaluator.hpp"
#include "crum/oracle.hpp"
#include "crum/reranker.hpp"
#include "test_util.hpp"

namespace crum::reranker {
namespace {

RerankerConfig tiny_config() {
  RerankerConfig c;
  c.feature_dim = 3;
  c.n_max = 4;
  c.mlp_hidden = {5, 4};
  return c;
}

TEST(SamplePairs, CapsAtAvailablePairs) {
  EXPECT_EQ(sample_pairs(Permutation::identity(2), 10, 1).size(), 1u);
  EXPECT_TRUE(sample_pairs(Permutation::identity(1), 10, 1).empty());
  EXPECT_TRUE(sample_pairs(Permutation::identity(0), 10, 1).empty());
}

TEST(SamplePairs, DistinctAndOrientedByInitialPosition) {
  const Permutation initial(std::vector<int>{4, 9, 1, 10, 2, 7, 3, 5, 8, 6});
  const auto pairs = sample_pairs(initial, 10, 3);
  ASSERT_EQ(pairs.size(), 10u);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& [i, j] : pairs) {
    EXPECT_GT(initial.position(i), initial.position(j));
    EXPECT_TRUE(seen.insert({std::min(i, j), std::max(i, j)}).second);
  }
  EXPECT_EQ(sample_pairs(initial, 10, 3), pairs);
  EXPECT_NE(sample_pairs(initial, 10, 4), pairs);
}

TEST(SamplePairs, UniformOverUnorderedPairs) {
  const auto initial = Permutation::identity(5);
  std::map<std::pair<std::size_t, std::size_t>, int> counts;
  constexpr int kDraws = 20000;
  for (int s = 0; s < kDraws; ++s) {
    for (const auto& [i, j] : sample_pairs(initial, 2, s)) ++counts[{j, i}];
  }
  ASSERT_EQ(counts.size(), 10u);
  // Each of the 10 pairs is included with probability 2/10.
  const double p = 0.2;
  const double sd = std::sqrt(kDraws * p * (1 - p));
  for (const auto& [pair, c] : counts) EXPECT_NEAR(c, kDraws * p, 5 * sd);
}

TEST(LambdaLoss, Examples) {
  const std::vector<Pair> one = {{1, 0}};
  EXPECT_NEAR(lambda_utility_loss(std::vector<double>{0.3, 0.3}, one, std::vector<double>{1.0}, 1.0),
              std::log(2.0), 1e-15);
  EXPECT_EQ(lambda_utility_loss(std::vector<double>{0.0, 5.0}, one, std::vector<double>{0.0}, 1.0),
            0.0);
  EXPECT_LT(lambda_utility_loss(std::vector<double>{0.0, 1.0}, one, std::vector<double>{1.0}, 1e4),
            1e-12);
}

TEST(LambdaLoss, NegativeDeltaFlipsTheDesiredOrder) {
  const std::vector<Pair> one = {{1, 0}};
  const std::vector<double> s = {0.2, 1.1};
  EXPECT_NEAR(lambda_utility_loss(s, one, std::vector<double>{-2.0}, 1.0),
              2.0 * std::log1p(std::exp(-(0.2 - 1.1))), 1e-14);
  EXPECT_NEAR(lambda_utility_loss(s, one, std::vector<double>{2.0}, 1.0),
              2.0 * std::log1p(std::exp(-(1.1 - 0.2))), 1e-14);
}

TEST(LambdaLoss, MonotoneInMarginAndNonNegative) {
  const std::vector<Pair> one = {{0, 1}};
  double previous = std::numeric_limits<double>::infinity();
  for (double margin = -4.0; margin <= 4.0; margin += 0.5) {
    const double l = lambda_utility_loss(std::vector<double>{margin, 0.0}, one,
                                         std::vector<double>{0.7}, 1.0);
    EXPECT_GE(l, 0.0);
    EXPECT_LT(l, previous);
    previous = l;
  }
}

TEST(LambdaLoss, ScoreGradientMatchesFiniteDifferences) {
  const std::vector<double> s = {0.4, -0.3, 1.2, 0.1};
  const std::vector<Pair> pairs = {{1, 0}, {3, 2}, {2, 0}};
  const std::vector<double> deltas = {0.5, -1.5, 0.0};
  std::vector<double> grad;
  lambda_utility_loss(s, pairs, deltas, 1.3, &grad);
  for (std::size_t k = 0; k < s.size(); ++k) {
    auto up = s, down = s;
    up[k] += 1e-6;
    down[k] -= 1e-6;
    const double numeric = (lambda_utility_loss(up, pairs, deltas, 1.3) -
                            lambda_utility_loss(down, pairs, deltas, 1.3)) / 2e-6;
    EXPECT_NEAR(grad[k], numeric, 1e-8);
  }
}

TEST(Reranker, ParameterGradientMatchesFiniteDifferences) {
  const Reranker model(tiny_config(), 4);
  const ParameterStore params = model.init_parameters(5);
  const auto a = testing::make_request(testing::random_matrix(3, 3, 1, 0, 1), {1, 0, 1});
  const auto b = testing::make_request(testing::random_matrix(2, 3, 2, 0, 1), {0, 1});
  const Matrix ga = testing::random_matrix(3, 4, 3, -1, 1);
  const Matrix gb = testing::random_matrix(2, 4, 4, -1, 1);
  const std::vector<Pair> pa = {{1, 0}, {2, 1}, {2, 0}};
  const std::vector<double> da = {0.3, -0.8, 0.05};
  const std::vector<Pair> pb = {{1, 0}};
  const std::vector<double> db = {1.1};
  const std::vector<Reranker::Example> batch = {{&a, &ga, pa, da}, {&b, &gb, pb, db}};
  const auto loss = [&](const ParameterStore& p, ParameterStore* g) {
    return model.loss_and_gradient(p, batch, g);
  };
  EXPECT_LT(oracle::finite_difference_gradcheck(loss, params).max_relative_error, 1e-4);
}

TEST(Reranker, ZeroWeightsGiveTheOutputBias) {
  const Reranker model(tiny_config(), 4);
  ParameterStore params = model.init_parameters(1);
  for (const char* layer : {"l0", "l1", "l2"}) {
    params.at(std::string("reranker/mlp/") + layer + "/w").setZero();
  }
  params.at("reranker/mlp/l2/b")(0, 0) = 0.625;
  const auto r = testing::make_request(testing::random_matrix(3, 3, 7, 0, 1), {1, 1, 0});
  for (double s : model.scores(params, r, testing::random_matrix(3, 4, 8, 0, 1))) {
    EXPECT_DOUBLE_EQ(s, 0.625);
  }
}

TEST(Reranker, IdenticalItemsAtDifferentPositionsCanScoreDifferently) {
  RerankerConfig c = tiny_config();
  c.use_graph = false;
  const Reranker model(c, 4);
  const auto params = model.init_parameters(2);
  const Matrix same = Matrix::Constant(2, 3, 0.5);
  const auto r = testing::make_request(same, {1, 1});
  const auto s = model.scores(params, r, Matrix());
  EXPECT_NE(s[0], s[1]);
}

TEST(Reranker, RerankBreaksTiesByInitialPositionAndIsIdempotent) {
  const Reranker model(tiny_config(), 4);
  ParameterStore params = model.init_parameters(1);
  params.at("reranker/mlp/l2/w").setZero();
  auto r = testing::make_request(testing::random_matrix(4, 3, 1, 0, 1), {0, 1, 0, 1},
                                 {3, 1, 4, 2});
  const Matrix g = testing::random_matrix(4, 4, 2, 0, 1);
  EXPECT_EQ(rerank(model, params, r, g), r.initial);

  const ParameterStore trained = model.init_parameters(9);
  const Permutation once = rerank(model, trained, r, g);
  EXPECT_TRUE(Permutation::is_bijection(once.positions()));
  EXPECT_EQ(rerank(model, trained, r, g), once);
}

TEST(Reranker, RejectsMismatchedInputs) {
  const Reranker model(tiny_config(), 4);
  const auto params = model.init_parameters(1);
  const auto r = testing::make_request(testing::random_matrix(2, 3, 1, 0, 1), {0, 1});
  EXPECT_THROW(model.scores(params, r, Matrix::Zero(2, 3)), ConfigError);
  const auto wide = testing::make_request(testing::random_matrix(2, 5, 1, 0, 1), {0, 1});
  EXPECT_THROW(model.scores(params, wide, Matrix::Zero(2, 4)), ConfigError);
}

struct Fixture {
  evaluator::Evaluator evaluator{[] {
    evaluator::EvaluatorConfig c;
    c.feature_dim = 4;
    c.n_max = 5;
    c.lstm_hidden = 4;
    c.mlp_hidden = {6};
    c.gat.width = 4;
    return c;
  }()};
  ParameterStore evaluator_params = evaluator.init_parameters(3);
  data::Dataset train;
  data::Dataset validation;
  Reranker reranker{[] {
    RerankerConfig c;
    c.feature_dim = 4;
    c.n_max = 5;
    c.mlp_hidden = {6};
    return c;
  }(), 4};

  Fixture() {
    train = data::binarize_labels(data::generate_synthetic(12, 5, 4, 1), 1);
    validation = data::binarize_labels(data::generate_synthetic(4, 5, 4, 2), 1);
    clicks::simulate_dataset(train, {}, 1);
    clicks::simulate_dataset(validation, {}, 2);
  }
};

TEST(TrainReranker, EvaluatorParametersStayByteIdentical) {
  Fixture f;
  const ParameterStore before = f.evaluator_params;
  RerankerTrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  RerankerHistory history;
  const auto theta = train_reranker(f.reranker, f.evaluator, f.evaluator_params, f.train,
                                    f.validation, cfg, 7, &history);
  EXPECT_TRUE(f.evaluator_params.same_values(before));
  EXPECT_FALSE(theta.contains("evaluator/mlp/l0/w"));
  EXPECT_EQ(history.train_loss.size(), 2u);
  EXPECT_GT(history.delta_evaluations, 0u);
}

TEST(TrainReranker, ZeroLearningRateKeepsTheta) {
  Fixture f;
  RerankerTrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.epochs = 2;
  const auto theta = train_reranker(f.reranker, f.evaluator, f.evaluator_params, f.train,
                                    f.validation, cfg, 7);
  EXPECT_TRUE(theta.same_values(f.reranker.init_parameters(7)));
}

TEST(TrainReranker, DeterministicGivenSeed) {
  Fixture f;
  RerankerTrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.epochs = 2;
  cfg.batch_size = 5;
  const auto a = train_reranker(f.reranker, f.evaluator, f.evaluator_params, f.train,
                                f.validation, cfg, 11);
  const auto b = train_reranker(f.reranker, f.evaluator, f.evaluator_params, f.train,
                                f.validation, cfg, 11);
  EXPECT_TRUE(a.same_values(b));
}

TEST(TrainReranker, MissingEvaluatorParametersAreAConfigError) {
  Fixture f;
  ParameterStore partial = f.evaluator_params.subset("evaluator/mlp");
  EXPECT_THROW(train_reranker(f.reranker, f.evaluator, partial, f.train, f.validation, {}, 1),
               ConfigError);
}

TEST(UtilityMode, ParsesAndWeights) {
  EXPECT_EQ(parse_utility_mode("bids"), UtilityMode::kBids);
  EXPECT_EQ(utility_mode_name(UtilityMode::kClicks), "clicks");
  EXPECT_THROW(parse_utility_mode("revenue"), ConfigError);
  auto r = testing::make_request(testing::random_matrix(2, 3, 1, 0, 1), {0, 1});
  r.bids = {2.5, 0.5};
  EXPECT_EQ(utility_weights(r, UtilityMode::kBids), r.bids);
  EXPECT_EQ(utility_weights(r, UtilityMode::kClicks), (std::vector<double>{1.0, 1.0}));
}

}  // namespace
}  // namespace crum::reranker
