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

#include "crum/initial_rankers.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

#include "crum/error.hpp"
#include "crum/random.hpp"

namespace crum::rankers {

RankerKind parse_ranker_kind(std::string_view name) {
  if (name == "pointwise") return RankerKind::kPointwise;
  if (name == "random") return RankerKind::kRandom;
  if (name == "reverse") return RankerKind::kReverse;
  throw ConfigError("unknown initial ranker '" + std::string(name) + "'");
}

std::string_view ranker_kind_name(RankerKind kind) {
  switch (kind) {
    case RankerKind::kPointwise: return "pointwise";
    case RankerKind::kRandom: return "random";
    case RankerKind::kReverse: return "reverse";
  }
  return "pointwise";
}

PointwiseRanker::PointwiseRanker(Index feature_dim,
                                 const PointwiseConfig& config)
    : feature_dim_(feature_dim),
      mlp_("ranker/mlp",
           nn::MlpSpec{feature_dim, config.hidden, config.activation}) {
  if (feature_dim <= 0) throw ConfigError("ranker: feature_dim must be positive");
}

ParameterStore PointwiseRanker::init_parameters(std::uint64_t seed) const {
  ParameterStore store;
  Rng rng(derive_seed(seed, "ranker-init"));
  mlp_.add_parameters(store, rng);
  return store;
}

std::vector<double> PointwiseRanker::scores(const ParameterStore& params,
                                            const Matrix& features) const {
  if (features.cols() != feature_dim_) {
    throw DomainError("ranker: expected " + std::to_string(feature_dim_) +
                      " features, got " + std::to_string(features.cols()));
  }
  const Matrix logits = mlp_.forward(params, features, nullptr);
  return {logits.data(), logits.data() + logits.rows()};
}

double PointwiseRanker::loss_and_gradient(const ParameterStore& params,
                                          const Matrix& features,
                                          const Matrix& labels,
                                          ParameterStore* grads) const {
  nn::MlpCache cache;
  const Matrix logits = mlp_.forward(params, features, grads ? &cache : nullptr);
  Matrix d_logits;
  const double loss =
      nn::bce_with_logits(logits, labels, grads ? &d_logits : nullptr);
  if (grads) mlp_.backward(params, cache, d_logits, *grads);
  return loss;
}

namespace {

struct Flat {
  Matrix features;
  Matrix labels;
};

Flat flatten(const data::Dataset& dataset, Index feature_dim) {
  Flat flat;
  const auto rows = static_cast<Index>(dataset.num_items());
  flat.features.resize(rows, feature_dim);
  flat.labels.resize(rows, 1);
  Index row = 0;
  for (const auto& request : dataset.requests) {
    if (request.features.cols() != feature_dim) {
      throw DomainError("ranker: feature dimension mismatch in '" +
                        request.id + "'");
    }
    for (std::size_t i = 0; i < request.size(); ++i, ++row) {
      flat.features.row(row) = request.features.row(static_cast<Index>(i));
      flat.labels(row, 0) = request.binary_labels[i];
    }
  }
  return flat;
}

double mean_loss(const PointwiseRanker& ranker, const ParameterStore& params,
                 const Flat& flat) {
  if (flat.features.rows() == 0) return 0.0;
  return ranker.loss_and_gradient(params, flat.features, flat.labels, nullptr) /
         static_cast<double>(flat.features.rows());
}

}  // namespace

double mean_pointwise_loss(const PointwiseRanker& ranker,
                           const ParameterStore& params,
                           const data::Dataset& dataset) {
  return mean_loss(ranker, params, flatten(dataset, ranker.feature_dim()));
}

ParameterStore train_pointwise(const PointwiseRanker& ranker,
                               const data::Dataset& train,
                               const data::Dataset& validation,
                               const PointwiseConfig& config,
                               std::uint64_t seed, PointwiseHistory* history) {
  const Flat train_set = flatten(train, ranker.feature_dim());
  if (train_set.features.rows() == 0) {
    throw TrainingError("pointwise ranker needs at least one training item");
  }
  if (config.batch_size == 0) throw ConfigError("batch size must be positive");
  const Flat validation_set = flatten(validation, ranker.feature_dim());
  const Flat& selection =
      validation_set.features.rows() > 0 ? validation_set : train_set;

  ParameterStore params = ranker.init_parameters(seed);
  ParameterStore grads = params.zeros_like();
  nn::Adam optimizer(params, {.learning_rate = config.learning_rate});
  ParameterStore best = params;
  double best_loss = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  int stale = 0;

  const auto rows = static_cast<std::size_t>(train_set.features.rows());
  std::vector<std::size_t> order(rows);
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(epoch) + 2000));
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < rows; begin += config.batch_size) {
      const std::size_t end = std::min(rows, begin + config.batch_size);
      const auto count = static_cast<Index>(end - begin);
      Matrix x(count, ranker.feature_dim());
      Matrix y(count, 1);
      for (Index r = 0; r < count; ++r) {
        const auto src = static_cast<Index>(order[begin + static_cast<std::size_t>(r)]);
        x.row(r) = train_set.features.row(src);
        y(r, 0) = train_set.labels(src, 0);
      }
      grads.set_zero();
      epoch_loss += ranker.loss_and_gradient(params, x, y, &grads);
      for (auto& g : grads.entries()) g.value /= static_cast<double>(count);
      optimizer.step(params, grads);
    }
    const double selection_loss = mean_loss(ranker, params, selection);
    if (history) {
      history->train_loss.push_back(epoch_loss / static_cast<double>(rows));
      history->validation_loss.push_back(selection_loss);
    }
    if (selection_loss < best_loss) {
      best_loss = selection_loss;
      best = params;
      best_epoch = epoch;
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
  }
  if (history) history->best_epoch = best_epoch;
  return best;
}

Permutation rank_by_scores(std::span<const double> scores) {
  std::vector<int> index(scores.size());
  std::iota(index.begin(), index.end(), 0);
  return Permutation::from_scores(scores, index);
}

Permutation random_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  return Permutation::from_order(order);
}

Permutation rank(RankerKind kind, const PointwiseRanker& ranker,
                 const ParameterStore& params,
                 const data::RankedRequest& request, std::uint64_t seed) {
  switch (kind) {
    case RankerKind::kRandom:
      return random_permutation(request.size(),
                                derive_seed(seed, "random-ranker/" + request.id));
    case RankerKind::kReverse:
      return rank_by_scores(ranker.scores(params, request.features)).reversed();
    case RankerKind::kPointwise:
      break;
  }
  return rank_by_scores(ranker.scores(params, request.features));
}

data::Dataset apply_ranker(const data::Dataset& dataset, RankerKind kind,
                           const PointwiseRanker& ranker,
                           const ParameterStore& params, std::uint64_t seed) {
  data::Dataset out = dataset;
  for (auto& request : out.requests) {
    request.initial = rank(kind, ranker, params, request, seed);
    request.clicks.reset();
  }
  return out;
}

}  // namespace crum::rankers
