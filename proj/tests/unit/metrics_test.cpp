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

#include <algorithm>
#include <cmath>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "crum/error.hpp"
#include "crum/metrics.hpp"
#include "crum/random.hpp"
#include "test_util.hpp"

namespace crum::metrics {
namespace {

using testing::make_request;
using testing::random_matrix;

TEST(AveragePrecision, Examples) {
  EXPECT_DOUBLE_EQ(average_precision(std::vector<int>{1, 1, 1}), 1.0);
  EXPECT_NEAR(average_precision(std::vector<int>{1, 0, 1}), (1.0 + 2.0 / 3.0) / 2.0, 1e-15);
  EXPECT_EQ(average_precision(std::vector<int>{0, 0, 0}), 0.0);
  EXPECT_EQ(average_precision(std::vector<int>{}), 0.0);
}

TEST(Ndcg, Examples) {
  EXPECT_DOUBLE_EQ(ndcg_at_k(std::vector<int>{1, 1, 0, 0}, 3), 1.0);
  EXPECT_NEAR(ndcg_at_k(std::vector<int>{1, 0, 1}, 2), 1.0 / (1.0 + 1.0 / std::log2(3.0)), 1e-15);
  EXPECT_NEAR(ndcg_at_k(std::vector<int>{1, 0, 1}, 2), 0.6131, 5e-5);
  EXPECT_EQ(ndcg_at_k(std::vector<int>{0, 0}, 2), 0.0);
  EXPECT_THROW(ndcg_at_k(std::vector<int>{1}, 0), DomainError);
}

TEST(Ndcg, CutoffBeyondListEqualsFullList) {
  const std::vector<int> labels = {0, 1, 0, 1, 1};
  EXPECT_DOUBLE_EQ(ndcg_at_k(labels, 50), ndcg_at_k(labels, labels.size()));
}

TEST(RankingMetrics, BoundedAndTieInvariant) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> labels(1 + rng.uniform_index(12));
    for (int& l : labels) l = rng.bernoulli(0.4) ? 1 : 0;
    const double ap = average_precision(labels);
    EXPECT_GE(ap, 0.0);
    EXPECT_LE(ap, 1.0 + 1e-12);
    for (std::size_t k : {1u, 3u, 10u}) {
      const double nd = ndcg_at_k(labels, k);
      EXPECT_GE(nd, 0.0);
      EXPECT_LE(nd, 1.0 + 1e-12);
    }
    // Swapping two equal labels is a relabelling of identical items.
    auto swapped = labels;
    for (std::size_t a = 0; a + 1 < swapped.size(); ++a) {
      if (swapped[a] == swapped[a + 1]) {
        std::swap(swapped[a], swapped[a + 1]);
        break;
      }
    }
    EXPECT_DOUBLE_EQ(ndcg_at_k(swapped, 5), ndcg_at_k(labels, 5));
    EXPECT_DOUBLE_EQ(average_precision(swapped), ap);
  }
}

TEST(LabelsInDisplayOrder, FollowsPermutation) {
  const auto r = make_request(random_matrix(3, 2, 1), {1, 0, 0}, {3, 1, 2});
  EXPECT_EQ(labels_in_display_order(r, r.initial), (std::vector<int>{0, 0, 1}));
}

data::Dataset two_identical_relevant() {
  Matrix f(2, 2);
  f << 0.4, 0.6, 0.4, 0.6;
  data::Dataset ds;
  ds.feature_dim = 2;
  ds.requests.push_back(make_request(f, {1, 1}));
  return ds;
}

TEST(OracleUtilityMetrics, Examples) {
  const auto ds = two_identical_relevant();
  const std::vector<Permutation> perms = {ds.requests[0].initial};
  const auto m = oracle_utility_metrics(ds, perms, {});
  EXPECT_NEAR(m.clicks_per_list, 1.6155722067, 1e-9);
  EXPECT_NEAR(m.ctr, 0.8077861034, 1e-9);
  EXPECT_EQ(oracle_utility_metrics(ds, perms, {}).ctr, m.ctr);

  data::Dataset none;
  none.feature_dim = 2;
  none.requests.push_back(make_request(random_matrix(3, 2, 2), {0, 0, 0}));
  const std::vector<Permutation> id = {none.requests[0].initial};
  const auto z = oracle_utility_metrics(none, id, {});
  EXPECT_EQ(z.clicks_per_list, 0.0);
  EXPECT_EQ(z.ctr, 0.0);
}

TEST(OracleUtilityMetrics, MatchesSimulatedClicks) {
  data::Dataset ds;
  ds.feature_dim = 3;
  ds.requests.push_back(make_request(random_matrix(5, 3, 4, 0, 1), {1, 0, 1, 1, 0}, {2, 5, 1, 3, 4}));
  const std::vector<Permutation> perms = {ds.requests[0].initial};
  const auto exact = oracle_utility_metrics(ds, perms, {});
  constexpr int kTrials = 100000;
  double sum = 0.0, sq = 0.0;
  for (int t = 0; t < kTrials; ++t) {
    const auto log = clicks::sample_clicks(ds.requests[0], perms[0], {}, ds.requests[0].relevance(), t);
    double c = 0.0;
    for (int v : log.clicks) c += v;
    sum += c;
    sq += c * c;
  }
  const double mean = sum / kTrials;
  const double se = std::sqrt((sq / kTrials - mean * mean) / kTrials);
  EXPECT_NEAR(exact.clicks_per_list, mean, 4 * se);
}

data::Dataset logged(std::vector<int> clicks, std::vector<double> bids, std::vector<int> positions) {
  data::Dataset ds;
  ds.feature_dim = 2;
  const auto n = static_cast<Index>(clicks.size());
  auto r = make_request(random_matrix(n, 2, 3), std::vector<int>(clicks.size(), 1),
                        std::move(positions));
  r.bids = std::move(bids);
  r.clicks = std::move(clicks);
  ds.requests.push_back(std::move(r));
  return ds;
}

TEST(RevenueAtK, Examples) {
  const auto none = logged({0, 0, 0}, {1, 2, 3}, {});
  const std::vector<Permutation> id = {Permutation::identity(3)};
  EXPECT_EQ(revenue_at_k(none, id, 3), 0.0);

  const auto one = logged({0, 1, 0}, {1, 2, 3}, {});
  const std::vector<Permutation> first = {Permutation(std::vector<int>{2, 1, 3})};
  EXPECT_DOUBLE_EQ(revenue_at_k(one, first, 3), 2.0);
  EXPECT_DOUBLE_EQ(revenue_at_k(one, first, 1), 2.0);
  const std::vector<Permutation> last = {Permutation(std::vector<int>{1, 3, 2})};
  EXPECT_DOUBLE_EQ(revenue_at_k(one, last, 2), 0.0);
}

TEST(RevenueAtK, MonotoneInCutoffAndFullListSum) {
  const auto ds = logged({1, 0, 1, 1}, {0.5, 2, 1.5, 3}, {4, 2, 1, 3});
  const std::vector<Permutation> perms = {ds.requests[0].initial};
  double previous = 0.0;
  for (std::size_t k = 1; k <= 6; ++k) {
    const double r = revenue_at_k(ds, perms, k);
    EXPECT_GE(r, previous);
    previous = r;
  }
  EXPECT_DOUBLE_EQ(revenue_at_k(ds, perms, 4), 0.5 + 1.5 + 3.0);
}

TEST(RevenueAtK, Errors) {
  const auto ds = logged({1, 0}, {1, 1}, {});
  const std::vector<Permutation> id = {Permutation::identity(2)};
  EXPECT_THROW(revenue_at_k(ds, id, 0), DomainError);
  auto unlogged = ds;
  unlogged.requests[0].clicks.reset();
  EXPECT_THROW(revenue_at_k(unlogged, id, 2), DomainError);
}

TEST(MetricsReport, EvaluateAndSerialise) {
  const auto ds = logged({1, 0, 1}, {1, 2, 3}, {});
  const std::vector<Permutation> id = {Permutation::identity(3)};
  const auto report = evaluate("x", ds, id, {});
  EXPECT_EQ(report.num_requests, 1u);
  EXPECT_EQ(report.ndcg.size(), 2u);
  EXPECT_EQ(report.revenue.size(), 4u);
  EXPECT_DOUBLE_EQ(report.revenue.at(3), 4.0);

  const auto back = report_from_json(to_json(report));
  EXPECT_EQ(back.name, "x");
  EXPECT_EQ(back.map, report.map);
  EXPECT_EQ(back.ndcg, report.ndcg);
  EXPECT_EQ(back.revenue, report.revenue);
  EXPECT_EQ(back.ctr, report.ctr);

  std::ostringstream csv;
  const std::vector<MetricsReport> rows = {report};
  write_csv(rows, csv);
  const std::string text = csv.str();
  EXPECT_EQ(text.rfind("name,map,ndcg@5,ndcg@10,clicks_per_list,ctr,", 0), 0u);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
}

TEST(MetricsReport, NoRevenueWithoutLogs) {
  auto ds = logged({1, 0}, {1, 1}, {});
  ds.requests[0].clicks.reset();
  const std::vector<Permutation> id = {Permutation::identity(2)};
  EXPECT_TRUE(evaluate("x", ds, id, {}).revenue.empty());
}

}  // namespace
}  // namespace crum::metrics
