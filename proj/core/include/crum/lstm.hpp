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

#ifndef CRUM_LSTM_HPP_
#define CRUM_LSTM_HPP_

#include <string>
#include <vector>

#include "crum/parameter_store.hpp"
#include "crum/random.hpp"
#include "crum/tensor.hpp"

namespace crum::nn {

struct LstmStepCache {
  Matrix prev_q, prev_c;
  Matrix gate_input;  // [q_{t-1}, w_t, c_{t-1}]
  Matrix cell_input;  // [q_{t-1}, w_t]
  Matrix out_input;   // [q_{t-1}, w_t, c_t]
  Matrix f, d, g, c, o, tanh_c;
};

// Unidirectional LSTM with full peephole connections:
//   f = s(W_f [q, w, c_prev] + b_f)      d = s(W_d [q, w, c_prev] + b_d)
//   c = f * c_prev + d * tanh(W_c [q, w] + b_c)
//   o = s(W_o [q, w, c] + b_o)           q' = o * tanh(c)
// Processes a batch of equal-length sequences; step t is a B x input matrix.
class Lstm {
 public:
  Lstm() = default;
  Lstm(std::string prefix, Index input, Index hidden);

  Index input_width() const { return input_; }
  Index hidden_width() const { return hidden_; }

  void add_parameters(ParameterStore& store, Rng& rng) const;

  std::vector<Matrix> forward(const ParameterStore& store,
                              const std::vector<Matrix>& steps,
                              std::vector<LstmStepCache>* cache) const;

  // d_outputs[t] is d loss / d q_t; returns d loss / d w_t per step.
  std::vector<Matrix> backward(const ParameterStore& store,
                               const std::vector<LstmStepCache>& cache,
                               const std::vector<Matrix>& d_outputs,
                               ParameterStore& grads) const;

 private:
  std::string name(const char* what) const { return prefix_ + "/" + what; }

  std::string prefix_;
  Index input_ = 0;
  Index hidden_ = 0;
};

}  // namespace crum::nn

#endif  // CRUM_LSTM_HPP_
