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

#ifndef CRUM_DATASET_HPP_
#define CRUM_DATASET_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "crum/permutation.hpp"
#include "crum/tensor.hpp"

namespace crum::data {

// One query's candidate list, stored column-wise: row i of `features`
// together with entry i of every per-item vector describes item i.
struct RankedRequest {
  std::string id;
  Matrix features;  // n x d
  std::vector<double> bids;
  std::vector<int> graded_labels;
  std::vector<int> binary_labels;
  Permutation initial;  // item -> initial display position
  std::optional<std::vector<int>> clicks;  // logged at initial positions

  std::size_t size() const { return bids.size(); }

  // Binary labels as click-model relevance probabilities.
  std::vector<double> relevance() const;

  // Throws SchemaError if the per-item vectors disagree in length or an
  // invariant (bid >= 0, labels in range, clicks binary) is broken.
  void validate() const;
};

struct Dataset {
  std::vector<RankedRequest> requests;
  std::size_t feature_dim = 0;
  std::size_t n_max = 0;

  bool empty() const { return requests.empty(); }
  std::size_t num_items() const;
  void validate() const;
};

// Parses `<label> qid:<id> <idx>:<val> ...` lines (1-based feature indices,
// trailing `# comment` ignored). Items are grouped by qid in order of first
// appearance; file order within a qid becomes the initial order. Absent
// features are 0. Bids default to 1. When `feature_dim` is given, an index
// beyond it is a SchemaError; otherwise the largest index seen is used.
Dataset parse_letor(std::istream& in,
                    std::optional<std::size_t> feature_dim = std::nullopt);

// Dense LETOR output in initial display order.
void write_letor(const Dataset& dataset, std::ostream& out);

// binary_label = graded_label > threshold.
Dataset binarize_labels(Dataset dataset, int threshold);

// Keeps the first `n_max` items of each list by initial position.
Dataset truncate(const Dataset& dataset, std::size_t n_max);

struct SplitRatios {
  double train = 0.6;
  double validation = 0.2;
  double test = 0.2;
};

struct Splits {
  Dataset train;
  Dataset validation;
  Dataset test;
};

// Truncates every list to `n_max`, then partitions requests with a seeded
// shuffle. Ratios must sum to 1 (ConfigError otherwise).
Splits truncate_and_split(const Dataset& dataset, std::size_t n_max,
                          const SplitRatios& ratios, std::uint64_t seed);

// Ground truth behind generate_synthetic. The hidden weights are fixed (they
// depend on the feature dimension only) so every seed samples the same world.
class SyntheticModel {
 public:
  explicit SyntheticModel(std::size_t feature_dim);

  // Standardized hidden linear score of a feature row.
  double hidden_score(const RowVector& features) const;

  // Exact P(graded_label >= min_grade | features).
  double label_probability(const RowVector& features, int min_grade) const;

  static constexpr double kSlope = 1.2;
  static constexpr double kOffset = 1.0;
  static constexpr double kNoise = 1.0;

 private:
  Vector weights_;
  double mean_ = 0.0;
  double stddev_ = 1.0;
};

// Desk-scale stand-in for LETOR corpora: uniform features in [0,1]^d,
// graded labels round(1.2 z + 1 + N(0,1)) clamped to 0..4 where z is the
// standardized hidden score, bids uniform in [0.5, 1.5]. Binary labels use
// threshold 1.
Dataset generate_synthetic(std::size_t n_requests, std::size_t n_items,
                           std::size_t feature_dim, std::uint64_t seed);

// Dataset archive: a manifest (format, version, feature_dim, n_max,
// request count) followed by one record per request.
nlohmann::json to_json(const Dataset& dataset);
Dataset dataset_from_json(const nlohmann::json& archive);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace crum::data

#endif  // CRUM_DATASET_HPP_
