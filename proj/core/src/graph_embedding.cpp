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

#include "crum/graph_embedding.hpp"

#include <cmath>

#include "crum/error.hpp"
#include "crum/nn.hpp"

namespace crum::gat {

RowVector PositionEncoding::encode(int position) const {
  if (position < 1 || position > n_max_) {
    throw DomainError("position " + std::to_string(position) +
                      " outside 1.." + std::to_string(n_max_));
  }
  RowVector v = RowVector::Zero(n_max_);
  v(position - 1) = 1.0;
  return v;
}

Matrix PositionEncoding::encode(const Permutation& permutation) const {
  Matrix m = Matrix::Zero(static_cast<Index>(permutation.size()), n_max_);
  for (std::size_t i = 0; i < permutation.size(); ++i) {
    const int p = permutation.position(i);
    if (p > n_max_) {
      throw DomainError("list longer than the position encoding width");
    }
    m(static_cast<Index>(i), p - 1) = 1.0;
  }
  return m;
}

GraphEmbedding::GraphEmbedding(GatConfig config)
    : config_(config), positions_(config.n_max) {
  if (config_.layers < 0 || config_.input_dim <= 0 || config_.n_max <= 0) {
    throw ConfigError("graph embedding: invalid shape configuration");
  }
  if (config_.layers > 0 &&
      (config_.heads <= 0 || config_.width % config_.heads != 0)) {
    throw ConfigError("graph embedding: heads must divide the layer width");
  }
}

Index GraphEmbedding::output_width() const {
  return config_.layers == 0 ? config_.input_dim : config_.width;
}

Index GraphEmbedding::layer_input_width(int layer) const {
  return (layer == 0 ? config_.input_dim : config_.width) + config_.n_max;
}

std::string GraphEmbedding::param_name(int layer, int head, const char* what) {
  return "gat/t" + std::to_string(layer) + "/h" + std::to_string(head) + "/" +
         what;
}

void GraphEmbedding::add_parameters(ParameterStore& store, Rng& rng) const {
  const Index head_width = config_.width / std::max(1, config_.heads);
  for (int t = 0; t < config_.layers; ++t) {
    const Index in = layer_input_width(t);
    for (int l = 0; l < config_.heads; ++l) {
      nn::xavier_uniform(store.add(param_name(t, l, "w"), in, head_width), in,
                         head_width, rng);
      nn::xavier_uniform(store.add(param_name(t, l, "a_src"), head_width, 1),
                         2 * head_width, 1, rng);
      nn::xavier_uniform(store.add(param_name(t, l, "a_dst"), head_width, 1),
                         2 * head_width, 1, rng);
    }
  }
}

Matrix GraphEmbedding::attention_layer(const ParameterStore& store, int layer,
                                       const Matrix& node_features,
                                       const Matrix& position_onehot,
                                       GatLayerCache* cache) const {
  nn::require_finite(node_features, "graph node features");
  const Index n = node_features.rows();
  const Index head_width = config_.width / config_.heads;
  Matrix input(n, node_features.cols() + position_onehot.cols());
  input << node_features, position_onehot;
  if (input.cols() != layer_input_width(layer)) {
    throw ConfigError("graph embedding layer " + std::to_string(layer) +
                      " expects input width " +
                      std::to_string(layer_input_width(layer)));
  }

  Matrix output(n, config_.width);
  if (cache) {
    cache->z.clear();
    cache->raw.clear();
    cache->attention.clear();
    cache->out.clear();
  }
  for (int l = 0; l < config_.heads; ++l) {
    Matrix z = input * store.at(param_name(layer, l, "w"));
    const Vector src = z * store.at(param_name(layer, l, "a_src"));
    const Vector dst = z * store.at(param_name(layer, l, "a_dst"));
    // raw(i, j) = a_src . z_i + a_dst . z_j
    Matrix raw = src.replicate(1, n) + dst.transpose().replicate(n, 1);
    Matrix attention(n, n);
    for (Index i = 0; i < n; ++i) {
      RowVector e = raw.row(i).unaryExpr([&](double v) {
        return v > 0.0 ? v : config_.leaky_slope * v;
      });
      e.array() -= e.maxCoeff();
      e = e.array().exp();
      attention.row(i) = e / e.sum();
    }
    Matrix out = (attention * z).array().tanh().matrix();
    output.middleCols(l * head_width, head_width) = out;
    if (cache) {
      cache->z.push_back(std::move(z));
      cache->raw.push_back(std::move(raw));
      cache->attention.push_back(std::move(attention));
      cache->out.push_back(std::move(out));
    }
  }
  if (cache) cache->input = std::move(input);
  return output;
}

Matrix GraphEmbedding::embed(const ParameterStore& store,
                             const Matrix& features,
                             const Permutation& initial,
                             GatCache* cache) const {
  if (features.cols() != config_.input_dim) {
    throw ConfigError("graph embedding expects feature dimension " +
                      std::to_string(config_.input_dim));
  }
  if (static_cast<std::size_t>(features.rows()) != initial.size()) {
    throw DomainError("initial permutation length differs from item count");
  }
  const Matrix onehot = positions_.encode(initial);
  if (cache) cache->layers.assign(static_cast<std::size_t>(config_.layers), {});
  Matrix h = features;
  for (int t = 0; t < config_.layers; ++t) {
    h = attention_layer(store, t, h, onehot,
                        cache ? &cache->layers[static_cast<std::size_t>(t)]
                              : nullptr);
  }
  return h;
}

Matrix GraphEmbedding::layer_backward(const ParameterStore& store, int layer,
                                      const GatLayerCache& cache,
                                      const Matrix& d_out,
                                      ParameterStore& grads) const {
  const Index n = cache.input.rows();
  const Index head_width = config_.width / config_.heads;
  Matrix d_input = Matrix::Zero(n, cache.input.cols());
  for (int l = 0; l < config_.heads; ++l) {
    const auto hl = static_cast<std::size_t>(l);
    const Matrix& z = cache.z[hl];
    const Matrix& alpha = cache.attention[hl];
    const Matrix& raw = cache.raw[hl];
    const Matrix d_agg =
        d_out.middleCols(l * head_width, head_width)
            .cwiseProduct((1.0 - cache.out[hl].array().square()).matrix());
    const Matrix d_alpha = d_agg * z.transpose();
    Matrix d_z = alpha.transpose() * d_agg;
    // Softmax backward per row, then through LeakyReLU.
    const Vector row_dot = (alpha.cwiseProduct(d_alpha)).rowwise().sum();
    Matrix d_raw(n, n);
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) {
        const double d_e = alpha(i, j) * (d_alpha(i, j) - row_dot(i));
        d_raw(i, j) = raw(i, j) > 0.0 ? d_e : config_.leaky_slope * d_e;
      }
    }
    const Vector d_src = d_raw.rowwise().sum();
    const Vector d_dst = d_raw.colwise().sum().transpose();
    const Matrix& a_src = store.at(param_name(layer, l, "a_src"));
    const Matrix& a_dst = store.at(param_name(layer, l, "a_dst"));
    grads.at(param_name(layer, l, "a_src")) += z.transpose() * d_src;
    grads.at(param_name(layer, l, "a_dst")) += z.transpose() * d_dst;
    d_z += d_src * a_src.transpose() + d_dst * a_dst.transpose();
    const Matrix& w = store.at(param_name(layer, l, "w"));
    grads.at(param_name(layer, l, "w")).noalias() +=
        cache.input.transpose() * d_z;
    d_input.noalias() += d_z * w.transpose();
  }
  return d_input;
}

void GraphEmbedding::backward(const ParameterStore& store,
                              const GatCache& cache, const Matrix& d_output,
                              ParameterStore& grads) const {
  Matrix delta = d_output;
  for (int t = config_.layers; t-- > 0;) {
    const auto& layer_cache = cache.layers[static_cast<std::size_t>(t)];
    const Matrix d_input = layer_backward(store, t, layer_cache, delta, grads);
    // Position one-hots are constants; only the node-feature part flows back.
    delta = d_input.leftCols(d_input.cols() - config_.n_max);
  }
}

}  // namespace crum::gat
