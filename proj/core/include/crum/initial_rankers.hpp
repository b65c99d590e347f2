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

#ifndef CRUM_INITIAL_RANKERS_HPP_
#define CRUM_INITIAL_RANKERS_HPP_

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "crum/dataset.hpp"
#include "crum/nn.hpp"
#include "crum/parameter_store.hpp"
#include "crum/permutation.hpp"

namespace crum::rankers {

enum class RankerKind { kPointwise, kRandom, kReverse };

RankerKind parse_ranker_kind(std::string_view name);
std::string_view ranker_kind_name(RankerKind kind);

struct PointwiseConfig {
  std::vector<Index> hidden{64, 32};
  nn::Activation activation = nn::Activation::kTanh;
  double learning_rate = 1e-3;
  std::size_t batch_size = 128;  // items per step
  int epochs = 40;
  int patience = 5;
};

// Feed-forward relevance scorer trained pointwise on binary labels.
class PointwiseRanker {
 public:
  PointwiseRanker(Index feature_dim, const PointwiseConfig& config);

  Index feature_dim() const { return feature_dim_; }
  ParameterStore init_parameters(std::uint64_t seed) const;

  // One logit per row of `features`; DomainError on a width mismatch.
  std::vector<double> scores(const ParameterStore& params,
                             const Matrix& features) const;

  // Summed cross-entropy against `labels`; gradients go to `grads` if set.
  double loss_and_gradient(const ParameterStore& params, const Matrix& features,
                           const Matrix& labels, ParameterStore* grads) const;

 private:
  Index feature_dim_;
  nn::Mlp mlp_;
};

struct PointwiseHistory {
  std::vector<double> train_loss;
  std::vector<double> validation_loss;
  int best_epoch = -1;
};

// Mini-batch Adam on per-item cross-entropy; returns the parameters with the
// lowest validation loss (training loss when validation is empty).
ParameterStore train_pointwise(const PointwiseRanker& ranker,
                               const data::Dataset& train,
                               const data::Dataset& validation,
                               const PointwiseConfig& config,
                               std::uint64_t seed,
                               PointwiseHistory* history = nullptr);

// Mean per-item cross-entropy of binary labels.
double mean_pointwise_loss(const PointwiseRanker& ranker,
                           const ParameterStore& params,
                           const data::Dataset& dataset);

// Descending score, ties by item index.
Permutation rank_by_scores(std::span<const double> scores);

// Uniformly random permutation of n items.
Permutation random_permutation(std::size_t n, std::uint64_t seed);

// The ranking a ranker of `kind` assigns to `request`. The random ranker
// uses a seed derived from `seed` and the request id; the reverse ranker
// inverts the pointwise order.
Permutation rank(RankerKind kind, const PointwiseRanker& ranker,
                 const ParameterStore& params,
                 const data::RankedRequest& request, std::uint64_t seed);

// Replaces every request's initial permutation and drops logged clicks,
// which belong to the previous ranking.
data::Dataset apply_ranker(const data::Dataset& dataset, RankerKind kind,
                           const PointwiseRanker& ranker,
                           const ParameterStore& params, std::uint64_t seed);

}  // namespace crum::rankers

#endif  // CRUM_INITIAL_RANKERS_HPP_
