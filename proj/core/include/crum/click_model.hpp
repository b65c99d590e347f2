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

#ifndef CRUM_CLICK_MODEL_HPP_
#define CRUM_CLICK_MODEL_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crum/dataset.hpp"
#include "crum/permutation.hpp"
#include "crum/tensor.hpp"

namespace crum::clicks {

// Oracle user: scans the list top-down and clicks item i at position k with
// probability rel(i) * k^-eta * sim(i, last clicked item).
struct ClickModelConfig {
  double eta = 0.7;
  int threshold = 1;
};

struct ClickLog {
  std::string request_id;
  Permutation permutation;
  std::vector<int> clicks;  // indexed by item
};

// 1 / position^eta. Throws DomainError for position < 1 or eta < 0.
double position_decay(int position, double eta);

// Cosine similarity clamped to [0, 1]; 1 when there is no previous click and
// 0 when either vector is zero.
double similarity_prob(const RowVector& current,
                       const std::optional<RowVector>& last_clicked);

ClickLog sample_clicks(const data::RankedRequest& request,
                       const Permutation& permutation,
                       const ClickModelConfig& config,
                       std::span<const double> relevance, std::uint64_t seed);

// Exact per-item marginal click probabilities. Dynamic program over the
// identity of the most recently clicked item, O(n^2).
std::vector<double> expected_clicks(const data::RankedRequest& request,
                                    const Permutation& permutation,
                                    const ClickModelConfig& config,
                                    std::span<const double> relevance);

// Simulates one click log per request under its initial permutation and
// stores the clicks on the request. Seeds are derived per request index.
std::vector<ClickLog> simulate_dataset(data::Dataset& dataset,
                                       const ClickModelConfig& config,
                                       std::uint64_t seed);

// Archive layout: {"format":"crum-clicklog","version":1,"logs":[{
// "request_id", "positions" (1-based, per item), "clicks" (0/1 per item)}]}.
void save_click_logs(std::span<const ClickLog> logs,
                     const std::filesystem::path& path);
std::vector<ClickLog> load_click_logs(const std::filesystem::path& path);

// Copies logged clicks onto matching requests; the log's permutation must
// equal the request's initial permutation.
void attach_click_logs(data::Dataset& dataset, std::span<const ClickLog> logs);

}  // namespace crum::clicks

#endif  // CRUM_CLICK_MODEL_HPP_
