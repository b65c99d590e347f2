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

#ifndef CRUM_GRAPH_EMBEDDING_HPP_
#define CRUM_GRAPH_EMBEDDING_HPP_

#include <string>
#include <vector>

#include "crum/parameter_store.hpp"
#include "crum/permutation.hpp"
#include "crum/random.hpp"
#include "crum/tensor.hpp"

namespace crum::gat {

// One-hot encoding of 1-based positions into R^{n_max}.
class PositionEncoding {
 public:
  explicit PositionEncoding(Index n_max) : n_max_(n_max) {}
  Index width() const { return n_max_; }
  RowVector encode(int position) const;
  // Row i is the one-hot vector of permutation.position(i).
  Matrix encode(const Permutation& permutation) const;

 private:
  Index n_max_;
};

struct GatConfig {
  Index input_dim = 0;  // raw feature dimension d
  Index n_max = 10;
  int layers = 2;       // T
  int heads = 4;        // L
  Index width = 64;     // output width of every layer, split across heads
  double leaky_slope = 0.2;
};

// Per layer t and head l the store holds:
//   gat/t<t>/h<l>/w      (m_t + n_max) x (width / heads)   linear map
//   gat/t<t>/h<l>/a_src  (width / heads) x 1               attention, z_i part
//   gat/t<t>/h<l>/a_dst  (width / heads) x 1               attention, z_j part
struct GatLayerCache {
  Matrix input;                   // [h ⊕ p], n x (m_t + n_max)
  std::vector<Matrix> z;          // per head, n x m_h
  std::vector<Matrix> raw;        // per head, n x n logits before LeakyReLU
  std::vector<Matrix> attention;  // per head, n x n, rows sum to one
  std::vector<Matrix> out;        // per head, n x m_h after tanh
};

struct GatCache {
  std::vector<GatLayerCache> layers;
};

// Position-aware graph attention over the fully connected item graph
// (self-edges included). Each node's input at every layer is its current
// feature concatenated with the one-hot of its initial position.
class GraphEmbedding {
 public:
  GraphEmbedding() = default;
  explicit GraphEmbedding(GatConfig config);

  const GatConfig& config() const { return config_; }
  Index output_width() const;

  void add_parameters(ParameterStore& store, Rng& rng) const;

  // One propagation step. `layer` selects the parameter block.
  Matrix attention_layer(const ParameterStore& store, int layer,
                         const Matrix& node_features,
                         const Matrix& position_onehot,
                         GatLayerCache* cache) const;

  // H^T for one request; with zero layers returns the raw features.
  Matrix embed(const ParameterStore& store, const Matrix& features,
               const Permutation& initial, GatCache* cache = nullptr) const;

  // Accumulates parameter gradients given d loss / d H^T.
  void backward(const ParameterStore& store, const GatCache& cache,
                const Matrix& d_output, ParameterStore& grads) const;

  static std::string param_name(int layer, int head, const char* what);

 private:
  Matrix layer_backward(const ParameterStore& store, int layer,
                        const GatLayerCache& cache, const Matrix& d_out,
                        ParameterStore& grads) const;
  Index layer_input_width(int layer) const;

  GatConfig config_;
  PositionEncoding positions_{10};
};

}  // namespace crum::gat

#endif  // CRUM_GRAPH_EMBEDDING_HPP_
