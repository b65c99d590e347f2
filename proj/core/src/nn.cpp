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

#include "crum/nn.hpp"

#include <cmath>

#include "crum/error.hpp"

namespace crum::nn {

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  if (name == "logistic") return Activation::kLogistic;
  if (name == "linear") return Activation::kLinear;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::string_view activation_name(Activation activation) {
  switch (activation) {
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
    case Activation::kLogistic: return "logistic";
    case Activation::kLinear: return "linear";
  }
  return "linear";
}

Matrix activate(Activation activation, const Matrix& pre) {
  switch (activation) {
    case Activation::kRelu: return pre.cwiseMax(0.0);
    case Activation::kTanh: return pre.array().tanh().matrix();
    case Activation::kLogistic:
      return pre.unaryExpr([](double v) { return logistic(v); });
    case Activation::kLinear: return pre;
  }
  return pre;
}

Matrix activation_grad(Activation activation, const Matrix& pre,
                       const Matrix& out) {
  switch (activation) {
    case Activation::kRelu:
      return pre.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
    case Activation::kTanh: return (1.0 - out.array().square()).matrix();
    case Activation::kLogistic:
      return (out.array() * (1.0 - out.array())).matrix();
    case Activation::kLinear: return Matrix::Ones(pre.rows(), pre.cols());
  }
  return Matrix::Ones(pre.rows(), pre.cols());
}

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

void xavier_uniform(Matrix& weights, Index fan_in, Index fan_out, Rng& rng) {
  const double bound =
      std::sqrt(6.0 / static_cast<double>(std::max<Index>(1, fan_in + fan_out)));
  for (Index r = 0; r < weights.rows(); ++r) {
    for (Index c = 0; c < weights.cols(); ++c) {
      weights(r, c) = rng.uniform(-bound, bound);
    }
  }
}

Mlp::Mlp(std::string prefix, MlpSpec spec)
    : prefix_(std::move(prefix)), spec_(std::move(spec)) {
  if (spec_.input <= 0) throw ConfigError(prefix_ + ": MLP input width must be positive");
  for (Index h : spec_.hidden) {
    if (h <= 0) throw ConfigError(prefix_ + ": MLP layer width must be positive");
  }
}

std::string Mlp::layer_name(std::size_t layer, const char* what) const {
  return prefix_ + "/l" + std::to_string(layer) + "/" + what;
}

void Mlp::add_parameters(ParameterStore& store, Rng& rng) const {
  Index fan_in = spec_.input;
  for (std::size_t k = 0; k <= spec_.hidden.size(); ++k) {
    const Index fan_out = k < spec_.hidden.size() ? spec_.hidden[k] : 1;
    Matrix& w = store.add(layer_name(k, "w"), fan_in, fan_out);
    xavier_uniform(w, fan_in, fan_out, rng);
    store.add(layer_name(k, "b"), 1, fan_out);
    fan_in = fan_out;
  }
}

Matrix Mlp::forward(const ParameterStore& store, const Matrix& x,
                    MlpCache* cache) const {
  if (x.cols() != spec_.input) {
    throw ConfigError(prefix_ + ": MLP expects input width " +
                      std::to_string(spec_.input) + ", got " +
                      std::to_string(x.cols()));
  }
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  Matrix h = x;
  for (std::size_t k = 0; k <= spec_.hidden.size(); ++k) {
    const Matrix& w = store.at(layer_name(k, "w"));
    const Matrix& b = store.at(layer_name(k, "b"));
    Matrix pre = h * w;
    pre.rowwise() += b.row(0);
    if (cache) cache->inputs.push_back(std::move(h));
    if (k == spec_.hidden.size()) return pre;
    h = activate(spec_.activation, pre);
    if (cache) cache->pre.push_back(std::move(pre));
  }
  return h;
}

Matrix Mlp::backward(const ParameterStore& store, const MlpCache& cache,
                     const Matrix& d_out, ParameterStore& grads) const {
  Matrix delta = d_out;
  for (std::size_t k = spec_.hidden.size() + 1; k-- > 0;) {
    const Matrix& input = cache.inputs[k];
    grads.at(layer_name(k, "w")).noalias() += input.transpose() * delta;
    grads.at(layer_name(k, "b")) += delta.colwise().sum();
    Matrix d_input = delta * store.at(layer_name(k, "w")).transpose();
    if (k == 0) return d_input;
    const Matrix& pre = cache.pre[k - 1];
    const Matrix& out = cache.inputs[k];
    delta = d_input.cwiseProduct(activation_grad(spec_.activation, pre, out));
  }
  return delta;
}

Adam::Adam(const ParameterStore& params, AdamConfig config)
    : config_(config),
      first_(params.zeros_like()),
      second_(params.zeros_like()) {}

void Adam::step(ParameterStore& params, const ParameterStore& grads) {
  ++steps_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params.entries().size(); ++i) {
    auto& p = params.entries()[i];
    const Matrix& g = grads.at(p.name);
    Matrix& m = first_.entries()[i].value;
    Matrix& v = second_.entries()[i].value;
    m = config_.beta1 * m + (1.0 - config_.beta1) * g;
    v = config_.beta2 * v + (1.0 - config_.beta2) * g.cwiseAbs2();
    p.value.array() -= config_.learning_rate * (m.array() / c1) /
                       ((v.array() / c2).sqrt() + config_.epsilon);
  }
}

double bce_with_logits(const Matrix& logits, const Matrix& targets,
                       Matrix* d_logits) {
  double loss = 0.0;
  if (d_logits) d_logits->resize(logits.rows(), logits.cols());
  for (Index r = 0; r < logits.rows(); ++r) {
    for (Index c = 0; c < logits.cols(); ++c) {
      const double z = logits(r, c);
      const double y = targets(r, c);
      // -[y log s(z) + (1 - y) log(1 - s(z))]
      loss += softplus(z) - y * z;
      if (d_logits) (*d_logits)(r, c) = logistic(z) - y;
    }
  }
  return loss;
}

void require_finite(const Matrix& m, std::string_view what) {
  if (!m.allFinite()) {
    throw NumericError(std::string(what) + " contains non-finite values");
  }
}

}  // namespace crum::nn
