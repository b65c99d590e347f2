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

#include "crum/reranker.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_map>

#include "crum/error.hpp"
#include "crum/random.hpp"

namespace crum::reranker {

UtilityMode parse_utility_mode(std::string_view name) {
  if (name == "clicks") return UtilityMode::kClicks;
  if (name == "bids") return UtilityMode::kBids;
  throw ConfigError("unknown utility mode '" + std::string(name) + "'");
}

std::string_view utility_mode_name(UtilityMode mode) {
  return mode == UtilityMode::kBids ? "bids" : "clicks";
}

std::vector<double> utility_weights(const data::RankedRequest& request,
                                    UtilityMode mode) {
  if (mode == UtilityMode::kBids) return request.bids;
  return std::vector<double>(request.size(), 1.0);
}

Reranker::Reranker(RerankerConfig config, Index graph_width)
    : config_(std::move(config)),
      graph_width_(config_.use_graph ? graph_width : 0),
      positions_(config_.n_max) {
  if (config_.feature_dim <= 0 || config_.n_max <= 0) {
    throw ConfigError("reranker: feature_dim and n_max must be positive");
  }
  if (!(config_.sigma > 0.0)) throw ConfigError("reranker: sigma must be > 0");
  mlp_ = nn::Mlp("reranker/mlp",
                 nn::MlpSpec{config_.feature_dim + graph_width_ + config_.n_max,
                             config_.mlp_hidden, config_.activation});
}

ParameterStore Reranker::init_parameters(std::uint64_t seed) const {
  ParameterStore store;
  Rng rng(derive_seed(seed, "reranker-init"));
  mlp_.add_parameters(store, rng);
  return store;
}

Matrix Reranker::inputs(const data::RankedRequest& request,
                        const Matrix& graph) const {
  const auto n = static_cast<Index>(request.size());
  const Index d = config_.feature_dim;
  if (request.features.cols() != d) {
    throw ConfigError("reranker: feature dimension mismatch");
  }
  if (graph_width_ > 0 && (graph.rows() != n || graph.cols() != graph_width_)) {
    throw ConfigError("reranker: graph embedding has the wrong shape");
  }
  Matrix x(n, d + graph_width_ + config_.n_max);
  x.leftCols(d) = request.features;
  if (graph_width_ > 0) x.middleCols(d, graph_width_) = graph;
  x.rightCols(config_.n_max) = positions_.encode(request.initial);
  return x;
}

std::vector<double> Reranker::scores(const ParameterStore& params,
                                     const data::RankedRequest& request,
                                     const Matrix& graph) const {
  const Matrix s = mlp_.forward(params, inputs(request, graph), nullptr);
  nn::require_finite(s, "reranker scores");
  return {s.data(), s.data() + s.rows()};
}

double Reranker::loss_and_gradient(const ParameterStore& params,
                                   std::span<const Example> batch,
                                   ParameterStore* grads) const {
  Index rows = 0;
  for (const auto& e : batch) rows += static_cast<Index>(e.request->size());
  Matrix x(rows, mlp_.spec().input);
  Index row = 0;
  for (const auto& e : batch) {
    const auto n = static_cast<Index>(e.request->size());
    x.middleRows(row, n) = inputs(*e.request, *e.graph);
    row += n;
  }
  nn::MlpCache cache;
  const Matrix s = mlp_.forward(params, x, grads ? &cache : nullptr);
  Matrix d_scores = Matrix::Zero(rows, 1);
  double loss = 0.0;
  row = 0;
  std::vector<double> d_local;
  for (const auto& e : batch) {
    const auto n = static_cast<Index>(e.request->size());
    d_local.assign(static_cast<std::size_t>(n), 0.0);
    loss += lambda_utility_loss(
        std::span<const double>(s.data() + row, static_cast<std::size_t>(n)),
        e.pairs, e.deltas, config_.sigma, grads ? &d_local : nullptr);
    for (Index i = 0; i < n; ++i) {
      d_scores(row + i, 0) = d_local[static_cast<std::size_t>(i)];
    }
    row += n;
  }
  if (grads) mlp_.backward(params, cache, d_scores, *grads);
  return loss;
}

std::vector<Pair> sample_pairs(const Permutation& initial, std::size_t count,
                               std::uint64_t seed) {
  const std::size_t n = initial.size();
  std::vector<Pair> all;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) all.emplace_back(a, b);
  }
  const std::size_t take = std::min(count, all.size());
  Rng rng(seed);
  // Partial Fisher-Yates: the first `take` slots are a uniform sample.
  for (std::size_t s = 0; s < take; ++s) {
    std::swap(all[s], all[s + rng.uniform_index(all.size() - s)]);
  }
  all.resize(take);
  for (auto& [i, j] : all) {
    if (initial.position(i) < initial.position(j)) std::swap(i, j);
  }
  return all;
}

double lambda_utility_loss(std::span<const double> scores,
                           std::span<const Pair> pairs,
                           std::span<const double> deltas, double sigma,
                           std::vector<double>* d_scores) {
  if (pairs.size() != deltas.size()) {
    throw DomainError("lambda loss: one delta per pair is required");
  }
  if (d_scores && d_scores->size() < scores.size()) d_scores->resize(scores.size(), 0.0);
  double loss = 0.0;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const double delta = deltas[p];
    if (delta == 0.0) continue;
    auto [hi, lo] = pairs[p];
    if (hi >= scores.size() || lo >= scores.size()) {
      throw DomainError("lambda loss: pair index out of range");
    }
    if (delta < 0.0) std::swap(hi, lo);
    const double weight = std::abs(delta);
    const double margin = sigma * (scores[hi] - scores[lo]);
    loss += weight * nn::softplus(-margin);
    if (d_scores) {
      const double g = -weight * sigma * nn::logistic(-margin);
      (*d_scores)[hi] += g;
      (*d_scores)[lo] -= g;
    }
  }
  return loss;
}

Permutation rerank(const Reranker& reranker, const ParameterStore& params,
                   const data::RankedRequest& request, const Matrix& graph) {
  const auto s = reranker.scores(params, request, graph);
  return Permutation::from_scores(s, request.initial.positions());
}

Permutation greedy_rerank(const evaluator::Evaluator& evaluator,
                          const ParameterStore& params,
                          const data::RankedRequest& request,
                          const Matrix& graph, std::span<const double> weights) {
  auto value =
      evaluator.predict_click_probs(params, request, request.initial, graph);
  for (std::size_t i = 0; i < value.size(); ++i) value[i] *= weights[i];
  return Permutation::from_scores(value, request.initial.positions());
}

double mean_evaluator_utility(const evaluator::Evaluator& evaluator,
                              const ParameterStore& params,
                              const data::Dataset& dataset,
                              std::span<const Matrix> graphs,
                              std::span<const Permutation> permutations,
                              UtilityMode mode) {
  const std::size_t count = dataset.requests.size();
  if (graphs.size() != count || permutations.size() != count) {
    throw DomainError("one graph and permutation per request is required");
  }
  if (count == 0) return 0.0;
  std::vector<evaluator::ScoringInput> inputs;
  inputs.reserve(count);
  for (std::size_t r = 0; r < count; ++r) {
    inputs.push_back({&dataset.requests[r], &permutations[r], &graphs[r]});
  }
  double total = 0.0;
  constexpr std::size_t kChunk = 256;
  for (std::size_t begin = 0; begin < count; begin += kChunk) {
    const auto chunk = std::span(inputs).subspan(begin, std::min(kChunk, count - begin));
    const auto probs = evaluator.predict(params, chunk);
    for (std::size_t k = 0; k < chunk.size(); ++k) {
      total += evaluator::list_utility(
          probs[k], utility_weights(*chunk[k].request, mode));
    }
  }
  return total / static_cast<double>(count);
}

namespace {

std::vector<Matrix> graphs_of(const evaluator::Evaluator& evaluator,
                              const ParameterStore& params,
                              const data::Dataset& dataset) {
  std::vector<Matrix> graphs;
  graphs.reserve(dataset.requests.size());
  for (const auto& request : dataset.requests) {
    graphs.push_back(evaluator.graph_embedding(params, request));
  }
  return graphs;
}

void require_frozen_parameters(const evaluator::Evaluator& evaluator,
                               const ParameterStore& params) {
  const ParameterStore expected = evaluator.init_parameters(0);
  for (const auto& entry : expected.entries()) {
    if (!params.contains(entry.name)) {
      throw ConfigError("frozen parameter '" + entry.name + "' is missing");
    }
    const Matrix& have = params.at(entry.name);
    if (have.rows() != entry.value.rows() || have.cols() != entry.value.cols()) {
      throw ConfigError("frozen parameter '" + entry.name +
                        "' has the wrong shape");
    }
  }
}

}  // namespace

ParameterStore train_reranker(const Reranker& reranker,
                              const evaluator::Evaluator& evaluator,
                              const ParameterStore& evaluator_params,
                              const data::Dataset& train,
                              const data::Dataset& validation,
                              const RerankerTrainConfig& config,
                              std::uint64_t seed, RerankerHistory* history) {
  require_frozen_parameters(evaluator, evaluator_params);
  if (config.batch_size == 0) throw ConfigError("batch size must be positive");
  if (train.empty()) throw TrainingError("reranker training set is empty");
  if (reranker.config().use_graph &&
      reranker.graph_width() != evaluator.graph_width()) {
    throw ConfigError("reranker graph width differs from the evaluator's");
  }

  std::vector<evaluator::UtilityEstimator> estimators;
  estimators.reserve(train.requests.size());
  for (const auto& request : train.requests) {
    if (!request.clicks) {
      throw TrainingError("request '" + request.id + "' has no click log");
    }
    estimators.emplace_back(evaluator, evaluator_params, request,
                            utility_weights(request, config.utility),
                            config.propensity_floor);
  }
  const data::Dataset& selection = validation.empty() ? train : validation;
  const auto selection_graphs = graphs_of(evaluator, evaluator_params, selection);

  // Deltas depend only on the frozen evaluator, so each (request, pair) is
  // computed once and reused across epochs.
  std::vector<std::unordered_map<std::size_t, double>> delta_cache(
      train.requests.size());

  ParameterStore params = reranker.init_parameters(seed);
  ParameterStore grads = params.zeros_like();
  nn::Adam optimizer(params, {.learning_rate = config.learning_rate});
  ParameterStore best = params;
  double best_utility = -std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  int stale = 0;

  std::vector<std::size_t> order(train.requests.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::vector<Pair>> pairs(train.requests.size());
  std::vector<std::vector<double>> deltas(train.requests.size());
  std::vector<Permutation> reranked(selection.requests.size());
  std::vector<Reranker::Example> batch;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto pair_epoch =
        static_cast<std::uint64_t>(config.resample_pairs ? epoch : 0);
    for (std::size_t r = 0; r < train.requests.size(); ++r) {
      pairs[r] = sample_pairs(
          train.requests[r].initial, config.pairs_per_list,
          derive_seed(derive_seed(seed, "pairs"), pair_epoch * 1000003ULL + r));
    }
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(epoch) + 3000));
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < order.size();
         begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      batch.clear();
      for (std::size_t k = begin; k < end; ++k) {
        const std::size_t r = order[k];
        const std::size_t n = train.requests[r].size();
        std::vector<Pair> missing;
        for (const auto& [i, j] : pairs[r]) {
          if (!delta_cache[r].contains(i * n + j)) missing.emplace_back(i, j);
        }
        if (!missing.empty()) {
          evaluator::PropensityDiagnostics diag;
          const auto fresh = estimators[r].delta_utilities(missing, &diag);
          for (std::size_t p = 0; p < missing.size(); ++p) {
            delta_cache[r][missing[p].first * n + missing[p].second] = fresh[p];
          }
          if (history) {
            history->delta_evaluations += missing.size();
            history->propensity.evaluated += diag.evaluated;
            history->propensity.clamped += diag.clamped;
          }
        }
        deltas[r].clear();
        for (const auto& [i, j] : pairs[r]) {
          deltas[r].push_back(delta_cache[r].at(i * n + j));
        }
        batch.push_back({&train.requests[r], &estimators[r].graph(), pairs[r],
                         deltas[r]});
      }
      grads.set_zero();
      epoch_loss += reranker.loss_and_gradient(params, batch, &grads);
      const double scale = 1.0 / static_cast<double>(batch.size());
      for (auto& g : grads.entries()) g.value *= scale;
      optimizer.step(params, grads);
    }

    for (std::size_t r = 0; r < selection.requests.size(); ++r) {
      reranked[r] = rerank(reranker, params, selection.requests[r],
                           selection_graphs[r]);
    }
    const double utility =
        mean_evaluator_utility(evaluator, evaluator_params, selection,
                               selection_graphs, reranked, config.utility);
    if (history) {
      history->train_loss.push_back(epoch_loss /
                                    static_cast<double>(train.requests.size()));
      history->validation_utility.push_back(utility);
    }
    if (utility > best_utility) {
      best_utility = utility;
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

}  // namespace crum::reranker
