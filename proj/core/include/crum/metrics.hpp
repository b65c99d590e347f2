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

#ifndef CRUM_METRICS_HPP_
#define CRUM_METRICS_HPP_

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "crum/click_model.hpp"
#include "crum/dataset.hpp"
#include "crum/permutation.hpp"

namespace crum::metrics {

// Mean over relevant ranks r of precision@r; 0 for a list with no relevant
// item.
double average_precision(std::span<const int> labels_in_display_order);

// DCG@k with gain = label and discount 1/log2(position + 1), normalised by
// the ideal order; 0 without relevant items. k beyond the list is clamped.
double ndcg_at_k(std::span<const int> labels_in_display_order, std::size_t k);

std::vector<int> labels_in_display_order(const data::RankedRequest& request,
                                         const Permutation& permutation);

struct UtilityMetrics {
  double clicks_per_list = 0.0;  // #Click
  double ctr = 0.0;              // mean per-item click probability
};

// Exact oracle-model clicks of each request under its permutation.
UtilityMetrics oracle_utility_metrics(const data::Dataset& dataset,
                                      std::span<const Permutation> permutations,
                                      const clicks::ClickModelConfig& config);

// Mean over requests of Σ_{positions <= k} bid * logged click of the item
// shown there. DomainError for k < 1 or a request without logged clicks.
double revenue_at_k(const data::Dataset& dataset,
                    std::span<const Permutation> permutations, std::size_t k);

struct MetricsReport {
  std::string name;
  double map = 0.0;
  std::map<std::size_t, double> ndcg;     // keyed by cutoff
  double clicks_per_list = 0.0;
  double ctr = 0.0;
  std::map<std::size_t, double> revenue;  // keyed by cutoff; empty if no logs
  std::size_t num_requests = 0;
};

inline constexpr std::size_t kNdcgCutoffs[] = {5, 10};
inline constexpr std::size_t kRevenueCutoffs[] = {3, 5, 10, 20};

MetricsReport evaluate(const std::string& name, const data::Dataset& dataset,
                       std::span<const Permutation> permutations,
                       const clicks::ClickModelConfig& config);

nlohmann::json to_json(const MetricsReport& report);
MetricsReport report_from_json(const nlohmann::json& json);

// Header row plus one row per report, in the given order.
void write_csv(std::span<const MetricsReport> reports, std::ostream& out);

}  // namespace crum::metrics

#endif  // CRUM_METRICS_HPP_
