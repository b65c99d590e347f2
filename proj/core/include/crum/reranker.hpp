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

#ifndef CRUM_RERANKER_HPP_
#define CRUM_RERANKER_HPP_

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "crum/dataset.hpp"
#include "crum/evaluator.hpp"
#include "crum/graph_embedding.hpp"
#include "crum/nn.hpp"
#include "crum/parameter_store.hpp"
#include "crum/permutation.hpp"

namespace crum::reranker {

using Pair = std::pair<std::size_t, std::size_t>;

// What a click is worth: 1 (click utility) or the item's bid (revenue).
enum class UtilityMode { kClicks, kBids };

UtilityMode parse_utility_mode(std::string_view name);
std::string_view utility_mode_name(UtilityMode mode);
std::vector<double> utility_weights(const data::RankedRequest& request,
                                    UtilityMode mode);

struct RerankerConfig {
  Index feature_dim = 0;
  Index n_max = 10;
  bool use_graph = true;  // false: the -GE ablation
  std::vector<Index> mlp_hidden{1024, 512, 128, 64};
  nn::Activation activation = nn::Activation::kRelu;
  double sigma = 1.0;
};

// Pairwise scorer s_i = Φ(x_i ⊕ h_i ⊕ p_{k_i}) over the initial positions.
class Reranker {
 public:
  // `graph_width` is the width of the frozen graph embedding; it is ignored
  // when the config disables the graph input.
  Reranker(RerankerConfig config, Index graph_width);

  const RerankerConfig& config() const { return config_; }
  Index graph_width() const { return graph_width_; }
  ParameterStore init_parameters(std::uint64_t seed) const;

  // Per-item inputs [x ⊕ h ⊕ p_k]; `graph` may be empty without a graph.
  Matrix inputs(const data::RankedRequest& request, const Matrix& graph) const;

  std::vector<double> scores(const ParameterStore& params,
                             const data::RankedRequest& request,
                             const Matrix& graph) const;

  struct Example {
    const data::RankedRequest* request = nullptr;
    const Matrix* graph = nullptr;
    std::span<const Pair> pairs;
    std::span<const double> deltas;
  };

  // Summed lambda loss of the examples; gradients go to `grads` if set.
  double loss_and_gradient(const ParameterStore& params,
                           std::span<const Example> batch,
                           ParameterStore* grads) const;

 private:
  RerankerConfig config_;
  Index graph_width_;
  gat::PositionEncoding positions_;
  nn::Mlp mlp_;
};

// Up to `count` distinct unordered pairs drawn uniformly without
// replacement, each oriented (i, j) so that item i sits below item j in
// `initial`. Fewer than two items give no pairs.
std::vector<Pair> sample_pairs(const Permutation& initial, std::size_t count,
                               std::uint64_t seed);

// Σ_pairs |Δ| log(1 + exp(-σ (s_hi - s_lo))) where hi is i when Δ > 0 and
// j when Δ < 0; pairs with Δ = 0 add nothing. d loss / d s is accumulated
// into `d_scores` when non-null.
// Summed pair loss. Score gradients are added into `d_scores`, which is
// grown to one entry per score if shorter.
double lambda_utility_loss(std::span<const double> scores,
                           std::span<const Pair> pairs,
                           std::span<const double> deltas, double sigma,
                           std::vector<double>* d_scores = nullptr);

struct RerankerTrainConfig {
  double learning_rate = 1e-5;
  std::size_t batch_size = 128;  // requests per step
  int epochs = 30;
  int patience = 5;
  std::size_t pairs_per_list = 10;
  bool resample_pairs = true;  // false: one fixed pair set for all epochs
  double propensity_floor = 1e-3;
  UtilityMode utility = UtilityMode::kClicks;
};

struct RerankerHistory {
  std::vector<double> train_loss;            // mean loss per request
  std::vector<double> validation_utility;    // mean evaluator utility
  int best_epoch = -1;
  std::size_t delta_evaluations = 0;
  evaluator::PropensityDiagnostics propensity;
};

// Trains Θ with the evaluator and graph embedding frozen. Every training
// request needs logged clicks. Returns the reranker tensors of the epoch
// with the highest mean evaluator utility on `validation` (on `train` when
// validation is empty).
ParameterStore train_reranker(const Reranker& reranker,
                              const evaluator::Evaluator& evaluator,
                              const ParameterStore& evaluator_params,
                              const data::Dataset& train,
                              const data::Dataset& validation,
                              const RerankerTrainConfig& config,
                              std::uint64_t seed,
                              RerankerHistory* history = nullptr);

// Descending score, ties by initial position.
Permutation rerank(const Reranker& reranker, const ParameterStore& params,
                   const data::RankedRequest& request, const Matrix& graph);

// Evaluation-before-reranking baseline: sort by predicted click probability
// under the initial context times the utility weight.
Permutation greedy_rerank(const evaluator::Evaluator& evaluator,
                          const ParameterStore& params,
                          const data::RankedRequest& request,
                          const Matrix& graph, std::span<const double> weights);

// Mean over requests of Σ_i P_eval(click_i | π) · w_i.
double mean_evaluator_utility(const evaluator::Evaluator& evaluator,
                              const ParameterStore& params,
                              const data::Dataset& dataset,
                              std::span<const Matrix> graphs,
                              std::span<const Permutation> permutations,
                              UtilityMode mode);

}  // namespace crum::reranker

#endif  // CRUM_RERANKER_HPP_
