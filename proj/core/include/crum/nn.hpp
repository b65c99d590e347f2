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

#ifndef CRUM_NN_HPP_
#define CRUM_NN_HPP_

#include <string>
#include <string_view>
#include <vector>

#include "crum/parameter_store.hpp"
#include "crum/random.hpp"
#include "crum/tensor.hpp"

namespace crum::nn {

enum class Activation { kRelu, kTanh, kLogistic, kLinear };

Activation parse_activation(std::string_view name);
std::string_view activation_name(Activation activation);

Matrix activate(Activation activation, const Matrix& pre);
// Derivative expressed through the pre-activation and its output.
Matrix activation_grad(Activation activation, const Matrix& pre,
                       const Matrix& out);

double logistic(double x);
// log(1 + e^x) without overflow.
double softplus(double x);

// Fan-based uniform init, U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
void xavier_uniform(Matrix& weights, Index fan_in, Index fan_out, Rng& rng);

// Feed-forward stack: input -> hidden[0] -> ... -> hidden[k-1] -> 1.
// Hidden layers use `activation`; the output layer is linear.
struct MlpSpec {
  Index input = 0;
  std::vector<Index> hidden;
  Activation activation = Activation::kRelu;
};

struct MlpCache {
  std::vector<Matrix> inputs;  // input of every layer
  std::vector<Matrix> pre;     // pre-activation of every hidden layer
};

// Parameters live in a ParameterStore under `<prefix>/l<k>/w` (in x out) and
// `<prefix>/l<k>/b` (1 x out).
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::string prefix, MlpSpec spec);

  const MlpSpec& spec() const { return spec_; }
  void add_parameters(ParameterStore& store, Rng& rng) const;

  // x: rows x input. Returns rows x 1. `cache` may be null for inference.
  Matrix forward(const ParameterStore& store, const Matrix& x,
                 MlpCache* cache) const;
  // Accumulates parameter gradients and returns d loss / d x.
  Matrix backward(const ParameterStore& store, const MlpCache& cache,
                  const Matrix& d_out, ParameterStore& grads) const;

 private:
  std::string layer_name(std::size_t layer, const char* what) const;

  std::string prefix_;
  MlpSpec spec_;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam(const ParameterStore& params, AdamConfig config);
  void step(ParameterStore& params, const ParameterStore& grads);

 private:
  AdamConfig config_;
  ParameterStore first_;
  ParameterStore second_;
  long steps_ = 0;
};

// Binary cross-entropy on logits: returns the summed loss and
// writes d loss / d logit into `d_logits` when non-null.
double bce_with_logits(const Matrix& logits, const Matrix& targets,
                       Matrix* d_logits);

// Throws NumericError if any entry is not finite.
void require_finite(const Matrix& m, std::string_view what);

}  // namespace crum::nn

#endif  // CRUM_NN_HPP_
