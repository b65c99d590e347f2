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

#ifndef CRUM_EVALUATOR_HPP_
#define CRUM_EVALUATOR_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "crum/dataset.hpp"
#include "crum/graph_embedding.hpp"
#include "crum/lstm.hpp"
#include "crum/nn.hpp"
#include "crum/parameter_store.hpp"
#include "crum/permutation.hpp"

namespace crum::evaluator {

struct EvaluatorConfig {
  Index feature_dim = 0;
  Index n_max = 10;
  bool use_bilstm = true;  // false: the -BL ablation
  bool use_graph = true;   // false: the -GAT ablation
  Index lstm_hidden = 64;  // per direction
  std::vector<Index> mlp_hidden{1024, 512, 128, 64};
  nn::Activation activation = nn::Activation::kRelu;
  gat::GatConfig gat;      // input_dim and n_max are overwritten
};

// One item list scored under a display permutation. `graph` is the
// request's graph embedding computed from its initial positions; it is
// ignored when the evaluator has no graph component.
struct ScoringInput {
  const data::RankedRequest* request = nullptr;
  const Permutation* permutation = nullptr;
  const Matrix* graph = nullptr;
};

// Logged clicks under a permutation (the initial one in practice).
struct TrainingExample {
  const data::RankedRequest* request = nullptr;
  const Permutation* permutation = nullptr;
  std::span<const int> clicks;
};

// Click-probability model g(x_i, h_i, p_pi(i)): per item the input
// w_i = [x_i ⊕ p_pi(i) ⊕ h_i] is read by a Bi-LSTM in display order and an
// MLP over [x_i ⊕ q_i] with a logistic output gives P(click).
class Evaluator {
 public:
  explicit Evaluator(EvaluatorConfig config);

  const EvaluatorConfig& config() const { return config_; }
  const gat::GraphEmbedding& graph() const { return graph_; }
  Index graph_width() const;

  // Fresh Xavier-initialised parameters, graph-embedding tensors included.
  ParameterStore init_parameters(std::uint64_t seed) const;

  // H^T under the request's initial positions (n x 0 without a graph).
  Matrix graph_embedding(const ParameterStore& params,
                         const data::RankedRequest& request) const;

  std::vector<double> predict_click_probs(const ParameterStore& params,
                                          const data::RankedRequest& request,
                                          const Permutation& permutation,
                                          const Matrix& graph) const;

  // Batched inference; result[k][i] is P(click) of item i in input k.
  std::vector<std::vector<double>> predict(
      const ParameterStore& params, std::span<const ScoringInput> inputs) const;

  // Summed per-item cross-entropy of the batch. Graph embeddings are
  // recomputed from the initial positions so their parameters get gradients
  // too. `grads` may be null.
  double loss_and_gradient(const ParameterStore& params,
                           std::span<const TrainingExample> batch,
                           ParameterStore* grads) const;

 private:
  struct Group;
  struct Cache;

  Matrix forward_logits(const ParameterStore& params,
                        std::span<const ScoringInput> inputs,
                        Cache* cache) const;
  void backward(const ParameterStore& params,
                std::span<const ScoringInput> inputs, const Cache& cache,
                const Matrix& d_logits, ParameterStore& grads,
                std::vector<Matrix>* d_graph) const;
  Index sequence_input_width() const;

  EvaluatorConfig config_;
  gat::GraphEmbedding graph_;
  gat::PositionEncoding positions_;
  nn::Lstm forward_lstm_;
  nn::Lstm backward_lstm_;
  nn::Mlp mlp_;
};

// Σ_i prob_i · b_i
double list_utility(std::span<const double> click_probs,
                    std::span<const double> bids);

struct PropensityDiagnostics {
  std::size_t evaluated = 0;
  std::size_t clamped = 0;
};

// Inverse-propensity estimate Σ_i c_i · P_pi(i) / max(P_logged(i), floor) · b_i
// from clicks logged at the initial positions.
double unbiased_utility(std::span<const int> logged_clicks,
                        std::span<const double> counterfactual_probs,
                        std::span<const double> logged_probs,
                        std::span<const double> bids, double propensity_floor,
                        PropensityDiagnostics* diagnostics = nullptr);

// Evaluator-backed utility estimates for one request with logged clicks.
class UtilityEstimator {
 public:
  UtilityEstimator(const Evaluator& evaluator, const ParameterStore& params,
                   const data::RankedRequest& request,
                   std::span<const double> utility_weights,
                   double propensity_floor);

  const Matrix& graph() const { return graph_; }
  const std::vector<double>& logged_probs() const { return logged_probs_; }

  double unbiased_utility(const Permutation& permutation,
                          PropensityDiagnostics* diagnostics = nullptr) const;

  // u(pi') - u(pi) where pi' swaps items i and j in the initial permutation;
  // exactly 0 when i == j.
  double delta_utility(std::size_t i, std::size_t j) const;

  // Batched delta_utility over several pairs.
  std::vector<double> delta_utilities(
      std::span<const std::pair<std::size_t, std::size_t>> pairs,
      PropensityDiagnostics* diagnostics = nullptr) const;

 private:
  const Evaluator& evaluator_;
  const ParameterStore& params_;
  const data::RankedRequest& request_;
  std::vector<double> weights_;
  double floor_;
  Matrix graph_;
  std::vector<double> logged_probs_;
  double logged_utility_ = 0.0;
};

struct TrainConfig {
  double learning_rate = 3e-4;
  std::size_t batch_size = 128;  // requests per step
  int epochs = 30;
  int patience = 5;
};

struct TrainingHistory {
  std::vector<double> train_loss;       // mean per-item loss per epoch
  std::vector<double> validation_loss;  // mean per-item loss per epoch
  int best_epoch = -1;
};

// Trains graph embedding and evaluator jointly on logged clicks (every
// request must carry clicks). Returns the parameters with the lowest
// validation loss; with an empty validation set the training loss is used.
ParameterStore train_evaluator(const Evaluator& evaluator,
                               const data::Dataset& train,
                               const data::Dataset& validation,
                               const TrainConfig& config, std::uint64_t seed,
                               TrainingHistory* history = nullptr);

// Mean per-item cross-entropy of logged clicks.
double mean_log_loss(const Evaluator& evaluator, const ParameterStore& params,
                     const data::Dataset& dataset);

}  // namespace crum::evaluator

#endif  // CRUM_EVALUATOR_HPP_
