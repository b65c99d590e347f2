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

#include "crum/evaluator.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>

#include "crum/error.hpp"
#include "crum/random.hpp"

namespace crum::evaluator {
namespace {

gat::GatConfig complete(gat::GatConfig gat, const EvaluatorConfig& config) {
  gat.input_dim = config.feature_dim;
  gat.n_max = config.n_max;
  return gat;
}

}  // namespace

struct Evaluator::Group {
  Index length = 0;
  std::vector<std::size_t> members;  // indices into the input batch
  std::vector<nn::LstmStepCache> forward_cache;
  std::vector<nn::LstmStepCache> backward_cache;
};

struct Evaluator::Cache {
  std::vector<Index> row_offset;
  std::vector<std::vector<std::size_t>> display_order;
  std::vector<Group> groups;
  nn::MlpCache mlp;
};

Evaluator::Evaluator(EvaluatorConfig config)
    : config_(std::move(config)),
      graph_(complete(config_.gat, config_)),
      positions_(config_.n_max) {
  if (config_.feature_dim <= 0 || config_.n_max <= 0) {
    throw ConfigError("evaluator: feature_dim and n_max must be positive");
  }
  const Index seq_width = sequence_input_width();
  Index mlp_input = seq_width;
  if (config_.use_bilstm) {
    forward_lstm_ = nn::Lstm("evaluator/lstm_fwd", seq_width, config_.lstm_hidden);
    backward_lstm_ = nn::Lstm("evaluator/lstm_bwd", seq_width, config_.lstm_hidden);
    mlp_input = config_.feature_dim + 2 * config_.lstm_hidden;
  }
  mlp_ = nn::Mlp("evaluator/mlp",
                 nn::MlpSpec{mlp_input, config_.mlp_hidden, config_.activation});
}

Index Evaluator::graph_width() const {
  return config_.use_graph ? graph_.output_width() : 0;
}

Index Evaluator::sequence_input_width() const {
  return config_.feature_dim + config_.n_max + graph_width();
}

ParameterStore Evaluator::init_parameters(std::uint64_t seed) const {
  ParameterStore store;
  Rng rng(derive_seed(seed, "evaluator-init"));
  if (config_.use_graph) graph_.add_parameters(store, rng);
  if (config_.use_bilstm) {
    forward_lstm_.add_parameters(store, rng);
    backward_lstm_.add_parameters(store, rng);
  }
  mlp_.add_parameters(store, rng);
  return store;
}

Matrix Evaluator::graph_embedding(const ParameterStore& params,
                                  const data::RankedRequest& request) const {
  if (!config_.use_graph) return Matrix(static_cast<Index>(request.size()), 0);
  return graph_.embed(params, request.features, request.initial);
}

Matrix Evaluator::forward_logits(const ParameterStore& params,
                                 std::span<const ScoringInput> inputs,
                                 Cache* cache) const {
  const Index d = config_.feature_dim;
  const Index gw = graph_width();
  const Index seq_width = sequence_input_width();

  std::vector<Index> offset(inputs.size() + 1, 0);
  std::vector<Matrix> sequence(inputs.size());
  std::vector<std::vector<std::size_t>> order(inputs.size());
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const auto& in = inputs[k];
    const auto& request = *in.request;
    const auto n = static_cast<Index>(request.size());
    if (in.permutation->size() != request.size() ||
        !Permutation::is_bijection(in.permutation->positions())) {
      throw DomainError("evaluator: invalid permutation for request '" +
                        request.id + "'");
    }
    if (request.features.cols() != d) {
      throw ConfigError("evaluator: feature dimension mismatch");
    }
    Matrix& seq = sequence[k];
    seq.resize(n, seq_width);
    seq.leftCols(d) = request.features;
    seq.middleCols(d, config_.n_max) = positions_.encode(*in.permutation);
    if (gw > 0) {
      if (in.graph == nullptr || in.graph->rows() != n || in.graph->cols() != gw) {
        throw ConfigError("evaluator: graph embedding has the wrong shape");
      }
      seq.rightCols(gw) = *in.graph;
    }
    order[k] = in.permutation->display_order();
    offset[k + 1] = offset[k] + n;
  }

  const Index rows = offset.back();
  const Index mlp_width = mlp_.spec().input;
  Matrix mlp_input(rows, mlp_width);
  if (!config_.use_bilstm) {
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      mlp_input.middleRows(offset[k], sequence[k].rows()) = sequence[k];
    }
  } else {
    const Index h = config_.lstm_hidden;
    std::map<Index, Group> by_length;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      Group& g = by_length[sequence[k].rows()];
      g.length = sequence[k].rows();
      g.members.push_back(k);
    }
    std::vector<Group> groups;
    for (auto& [length, group] : by_length) {
      if (length == 0) continue;
      const auto batch = static_cast<Index>(group.members.size());
      std::vector<Matrix> fwd_steps(static_cast<std::size_t>(length));
      std::vector<Matrix> bwd_steps(static_cast<std::size_t>(length));
      for (Index t = 0; t < length; ++t) {
        Matrix step(batch, seq_width);
        for (Index b = 0; b < batch; ++b) {
          const std::size_t k = group.members[static_cast<std::size_t>(b)];
          step.row(b) = sequence[k].row(
              static_cast<Index>(order[k][static_cast<std::size_t>(t)]));
        }
        fwd_steps[static_cast<std::size_t>(t)] = step;
        bwd_steps[static_cast<std::size_t>(length - 1 - t)] = std::move(step);
      }
      const auto fwd_out = forward_lstm_.forward(
          params, fwd_steps, cache ? &group.forward_cache : nullptr);
      const auto bwd_out = backward_lstm_.forward(
          params, bwd_steps, cache ? &group.backward_cache : nullptr);
      for (Index b = 0; b < batch; ++b) {
        const std::size_t k = group.members[static_cast<std::size_t>(b)];
        for (Index t = 0; t < length; ++t) {
          const auto item =
              static_cast<Index>(order[k][static_cast<std::size_t>(t)]);
          auto row = mlp_input.row(offset[k] + item);
          row.head(d) = inputs[k].request->features.row(item);
          row.segment(d, h) = fwd_out[static_cast<std::size_t>(t)].row(b);
          row.segment(d + h, h) =
              bwd_out[static_cast<std::size_t>(length - 1 - t)].row(b);
        }
      }
      groups.push_back(std::move(group));
    }
    if (cache) cache->groups = std::move(groups);
  }

  Matrix logits = mlp_.forward(params, mlp_input, cache ? &cache->mlp : nullptr);
  nn::require_finite(logits, "evaluator output");
  if (cache) {
    cache->row_offset = std::move(offset);
    cache->display_order = std::move(order);
  }
  return logits;
}

void Evaluator::backward(const ParameterStore& params,
                         std::span<const ScoringInput> inputs,
                         const Cache& cache, const Matrix& d_logits,
                         ParameterStore& grads,
                         std::vector<Matrix>* d_graph) const {
  const Index d = config_.feature_dim;
  const Index gw = graph_width();
  const Index seq_width = sequence_input_width();
  const Matrix d_mlp_input = mlp_.backward(params, cache.mlp, d_logits, grads);

  // d loss / d w_i, rows aligned with the MLP input rows.
  Matrix d_sequence;
  if (!config_.use_bilstm) {
    d_sequence = d_mlp_input;
  } else {
    d_sequence = Matrix::Zero(d_mlp_input.rows(), seq_width);
    const Index h = config_.lstm_hidden;
    for (const Group& group : cache.groups) {
      const Index length = group.length;
      const auto batch = static_cast<Index>(group.members.size());
      std::vector<Matrix> d_fwd(static_cast<std::size_t>(length),
                                Matrix(batch, h));
      std::vector<Matrix> d_bwd(static_cast<std::size_t>(length),
                                Matrix(batch, h));
      for (Index b = 0; b < batch; ++b) {
        const std::size_t k = group.members[static_cast<std::size_t>(b)];
        for (Index t = 0; t < length; ++t) {
          const Index row =
              cache.row_offset[k] +
              static_cast<Index>(cache.display_order[k][static_cast<std::size_t>(t)]);
          d_fwd[static_cast<std::size_t>(t)].row(b) =
              d_mlp_input.row(row).segment(d, h);
          d_bwd[static_cast<std::size_t>(length - 1 - t)].row(b) =
              d_mlp_input.row(row).segment(d + h, h);
        }
      }
      const auto d_fwd_in =
          forward_lstm_.backward(params, group.forward_cache, d_fwd, grads);
      const auto d_bwd_in =
          backward_lstm_.backward(params, group.backward_cache, d_bwd, grads);
      for (Index b = 0; b < batch; ++b) {
        const std::size_t k = group.members[static_cast<std::size_t>(b)];
        for (Index t = 0; t < length; ++t) {
          const Index row =
              cache.row_offset[k] +
              static_cast<Index>(cache.display_order[k][static_cast<std::size_t>(t)]);
          d_sequence.row(row) =
              d_fwd_in[static_cast<std::size_t>(t)].row(b) +
              d_bwd_in[static_cast<std::size_t>(length - 1 - t)].row(b);
        }
      }
    }
  }
  if (d_graph && gw > 0) {
    d_graph->resize(inputs.size());
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      const Index n = cache.row_offset[k + 1] - cache.row_offset[k];
      (*d_graph)[k] = d_sequence.block(cache.row_offset[k], d + config_.n_max,
                                       n, gw);
    }
  }
}

std::vector<std::vector<double>> Evaluator::predict(
    const ParameterStore& params, std::span<const ScoringInput> inputs) const {
  const Matrix logits = forward_logits(params, inputs, nullptr);
  std::vector<std::vector<double>> out(inputs.size());
  Index row = 0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    out[k].resize(inputs[k].request->size());
    for (double& p : out[k]) p = nn::logistic(logits(row++, 0));
  }
  return out;
}

std::vector<double> Evaluator::predict_click_probs(
    const ParameterStore& params, const data::RankedRequest& request,
    const Permutation& permutation, const Matrix& graph) const {
  const ScoringInput input{&request, &permutation, &graph};
  return predict(params, std::span(&input, 1)).front();
}

double Evaluator::loss_and_gradient(const ParameterStore& params,
                                    std::span<const TrainingExample> batch,
                                    ParameterStore* grads) const {
  std::vector<Matrix> graphs(batch.size());
  std::vector<gat::GatCache> gat_caches(batch.size());
  std::vector<ScoringInput> inputs(batch.size());
  Index rows = 0;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const auto& request = *batch[k].request;
    if (batch[k].clicks.size() != request.size()) {
      throw TrainingError("clicks missing for request '" + request.id + "'");
    }
    if (config_.use_graph) {
      graphs[k] = graph_.embed(params, request.features, request.initial,
                               grads ? &gat_caches[k] : nullptr);
    } else {
      graphs[k] = Matrix(static_cast<Index>(request.size()), 0);
    }
    inputs[k] = {&request, batch[k].permutation, &graphs[k]};
    rows += static_cast<Index>(request.size());
  }
  Cache cache;
  const Matrix logits = forward_logits(params, inputs, grads ? &cache : nullptr);
  Matrix targets(rows, 1);
  Index row = 0;
  for (const auto& example : batch) {
    for (int c : example.clicks) targets(row++, 0) = c;
  }
  Matrix d_logits;
  const double loss =
      nn::bce_with_logits(logits, targets, grads ? &d_logits : nullptr);
  if (grads) {
    std::vector<Matrix> d_graph;
    backward(params, inputs, cache, d_logits, *grads,
             config_.use_graph ? &d_graph : nullptr);
    if (config_.use_graph) {
      for (std::size_t k = 0; k < batch.size(); ++k) {
        graph_.backward(params, gat_caches[k], d_graph[k], *grads);
      }
    }
  }
  return loss;
}

double list_utility(std::span<const double> click_probs,
                    std::span<const double> bids) {
  if (click_probs.size() != bids.size()) {
    throw DomainError("list_utility: length mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < bids.size(); ++i) total += click_probs[i] * bids[i];
  return total;
}

double unbiased_utility(std::span<const int> logged_clicks,
                        std::span<const double> counterfactual_probs,
                        std::span<const double> logged_probs,
                        std::span<const double> bids, double propensity_floor,
                        PropensityDiagnostics* diagnostics) {
  const std::size_t n = bids.size();
  if (logged_clicks.size() != n || counterfactual_probs.size() != n ||
      logged_probs.size() != n) {
    throw DomainError("unbiased_utility: length mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (diagnostics) ++diagnostics->evaluated;
    double propensity = logged_probs[i];
    if (propensity < propensity_floor) {
      propensity = propensity_floor;
      if (diagnostics) ++diagnostics->clamped;
    }
    if (logged_clicks[i] == 0) continue;
    total += counterfactual_probs[i] / propensity * bids[i];
  }
  return total;
}

UtilityEstimator::UtilityEstimator(const Evaluator& evaluator,
                                   const ParameterStore& params,
                                   const data::RankedRequest& request,
                                   std::span<const double> utility_weights,
                                   double propensity_floor)
    : evaluator_(evaluator),
      params_(params),
      request_(request),
      weights_(utility_weights.begin(), utility_weights.end()),
      floor_(propensity_floor) {
  if (!request.clicks) {
    throw DomainError("request '" + request.id + "' has no logged clicks");
  }
  if (weights_.size() != request.size()) {
    throw DomainError("utility weights length differs from list length");
  }
  graph_ = evaluator_.graph_embedding(params_, request_);
  logged_probs_ = evaluator_.predict_click_probs(params_, request_,
                                                 request_.initial, graph_);
  logged_utility_ = evaluator::unbiased_utility(
      *request_.clicks, logged_probs_, logged_probs_, weights_, floor_);
}

double UtilityEstimator::unbiased_utility(
    const Permutation& permutation, PropensityDiagnostics* diagnostics) const {
  const auto probs =
      evaluator_.predict_click_probs(params_, request_, permutation, graph_);
  return evaluator::unbiased_utility(*request_.clicks, probs, logged_probs_,
                                     weights_, floor_, diagnostics);
}

double UtilityEstimator::delta_utility(std::size_t i, std::size_t j) const {
  const std::pair<std::size_t, std::size_t> pair{i, j};
  return delta_utilities(std::span(&pair, 1)).front();
}

std::vector<double> UtilityEstimator::delta_utilities(
    std::span<const std::pair<std::size_t, std::size_t>> pairs,
    PropensityDiagnostics* diagnostics) const {
  std::vector<double> deltas(pairs.size(), 0.0);
  std::vector<Permutation> swapped;
  std::vector<std::size_t> slot;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [i, j] = pairs[p];
    if (i >= request_.size() || j >= request_.size()) {
      throw DomainError("delta_utility: item index out of range");
    }
    if (i == j) continue;
    swapped.push_back(request_.initial.swapped(i, j));
    slot.push_back(p);
  }
  if (swapped.empty()) return deltas;
  std::vector<ScoringInput> inputs;
  inputs.reserve(swapped.size());
  for (const auto& perm : swapped) inputs.push_back({&request_, &perm, &graph_});
  const auto probs = evaluator_.predict(params_, inputs);
  for (std::size_t s = 0; s < swapped.size(); ++s) {
    deltas[slot[s]] =
        evaluator::unbiased_utility(*request_.clicks, probs[s], logged_probs_,
                                    weights_, floor_, diagnostics) -
        logged_utility_;
  }
  return deltas;
}

namespace {

std::vector<TrainingExample> examples_of(const data::Dataset& dataset) {
  std::vector<TrainingExample> examples;
  examples.reserve(dataset.requests.size());
  for (const auto& request : dataset.requests) {
    if (!request.clicks) {
      throw TrainingError("request '" + request.id + "' has no click log");
    }
    examples.push_back({&request, &request.initial, *request.clicks});
  }
  return examples;
}

double mean_loss(const Evaluator& evaluator, const ParameterStore& params,
                 std::span<const TrainingExample> examples) {
  constexpr std::size_t kChunk = 256;
  double total = 0.0;
  std::size_t items = 0;
  for (std::size_t begin = 0; begin < examples.size(); begin += kChunk) {
    const auto chunk = examples.subspan(
        begin, std::min(kChunk, examples.size() - begin));
    total += evaluator.loss_and_gradient(params, chunk, nullptr);
    for (const auto& e : chunk) items += e.clicks.size();
  }
  return items == 0 ? 0.0 : total / static_cast<double>(items);
}

}  // namespace

double mean_log_loss(const Evaluator& evaluator, const ParameterStore& params,
                     const data::Dataset& dataset) {
  const auto examples = examples_of(dataset);
  return mean_loss(evaluator, params, examples);
}

ParameterStore train_evaluator(const Evaluator& evaluator,
                               const data::Dataset& train,
                               const data::Dataset& validation,
                               const TrainConfig& config, std::uint64_t seed,
                               TrainingHistory* history) {
  if (train.empty() || train.num_items() == 0) {
    throw TrainingError("evaluator training needs a non-empty click log");
  }
  if (config.batch_size == 0) throw ConfigError("batch size must be positive");
  const auto train_examples = examples_of(train);
  const auto validation_examples = examples_of(validation);

  ParameterStore params = evaluator.init_parameters(seed);
  ParameterStore grads = params.zeros_like();
  nn::Adam optimizer(params, {.learning_rate = config.learning_rate});

  ParameterStore best = params;
  double best_loss = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  int stale = 0;
  std::vector<std::size_t> order(train_examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<TrainingExample> batch;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(epoch) + 1000));
    rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t epoch_items = 0;
    for (std::size_t begin = 0; begin < order.size();
         begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      batch.clear();
      std::size_t items = 0;
      for (std::size_t k = begin; k < end; ++k) {
        batch.push_back(train_examples[order[k]]);
        items += batch.back().clicks.size();
      }
      if (items == 0) continue;
      grads.set_zero();
      epoch_loss += evaluator.loss_and_gradient(params, batch, &grads);
      epoch_items += items;
      const double scale = 1.0 / static_cast<double>(items);
      for (auto& g : grads.entries()) g.value *= scale;
      optimizer.step(params, grads);
    }
    const double train_loss = epoch_loss / static_cast<double>(epoch_items);
    const double selection_loss =
        validation_examples.empty()
            ? mean_loss(evaluator, params, train_examples)
            : mean_loss(evaluator, params, validation_examples);
    if (history) {
      history->train_loss.push_back(train_loss);
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

}  // namespace crum::evaluator
