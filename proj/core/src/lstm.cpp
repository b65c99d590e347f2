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

#include "crum/lstm.hpp"

#include "crum/error.hpp"
#include "crum/nn.hpp"

namespace crum::nn {
namespace {

Matrix sigmoid(const Matrix& m) {
  return m.unaryExpr([](double v) { return logistic(v); });
}

Matrix concat(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

Matrix concat(const Matrix& a, const Matrix& b, const Matrix& c) {
  Matrix out(a.rows(), a.cols() + b.cols() + c.cols());
  out << a, b, c;
  return out;
}

}  // namespace

Lstm::Lstm(std::string prefix, Index input, Index hidden)
    : prefix_(std::move(prefix)), input_(input), hidden_(hidden) {
  if (input_ <= 0 || hidden_ <= 0) {
    throw ConfigError(prefix_ + ": LSTM widths must be positive");
  }
}

void Lstm::add_parameters(ParameterStore& store, Rng& rng) const {
  const Index gate_in = 2 * hidden_ + input_;
  const Index cell_in = hidden_ + input_;
  xavier_uniform(store.add(name("w_f"), gate_in, hidden_), gate_in, hidden_, rng);
  xavier_uniform(store.add(name("w_d"), gate_in, hidden_), gate_in, hidden_, rng);
  xavier_uniform(store.add(name("w_c"), cell_in, hidden_), cell_in, hidden_, rng);
  xavier_uniform(store.add(name("w_o"), gate_in, hidden_), gate_in, hidden_, rng);
  // Forget gate starts open.
  store.add(name("b_f"), 1, hidden_).setOnes();
  store.add(name("b_d"), 1, hidden_);
  store.add(name("b_c"), 1, hidden_);
  store.add(name("b_o"), 1, hidden_);
}

std::vector<Matrix> Lstm::forward(const ParameterStore& store,
                                  const std::vector<Matrix>& steps,
                                  std::vector<LstmStepCache>* cache) const {
  std::vector<Matrix> outputs;
  if (steps.empty()) return outputs;
  const Index batch = steps.front().rows();
  const Matrix& w_f = store.at(name("w_f"));
  const Matrix& w_d = store.at(name("w_d"));
  const Matrix& w_c = store.at(name("w_c"));
  const Matrix& w_o = store.at(name("w_o"));
  const RowVector b_f = store.at(name("b_f")).row(0);
  const RowVector b_d = store.at(name("b_d")).row(0);
  const RowVector b_c = store.at(name("b_c")).row(0);
  const RowVector b_o = store.at(name("b_o")).row(0);

  Matrix q = Matrix::Zero(batch, hidden_);
  Matrix c = Matrix::Zero(batch, hidden_);
  if (cache) cache->clear();
  outputs.reserve(steps.size());
  for (const Matrix& w : steps) {
    if (w.cols() != input_ || w.rows() != batch) {
      throw ConfigError(prefix_ + ": LSTM step has the wrong shape");
    }
    LstmStepCache step;
    step.gate_input = concat(q, w, c);
    step.cell_input = concat(q, w);
    Matrix f_pre = step.gate_input * w_f;
    f_pre.rowwise() += b_f;
    Matrix d_pre = step.gate_input * w_d;
    d_pre.rowwise() += b_d;
    Matrix g_pre = step.cell_input * w_c;
    g_pre.rowwise() += b_c;
    step.f = sigmoid(f_pre);
    step.d = sigmoid(d_pre);
    step.g = g_pre.array().tanh().matrix();
    step.c = step.f.cwiseProduct(c) + step.d.cwiseProduct(step.g);
    step.out_input = concat(q, w, step.c);
    Matrix o_pre = step.out_input * w_o;
    o_pre.rowwise() += b_o;
    step.o = sigmoid(o_pre);
    step.tanh_c = step.c.array().tanh().matrix();
    Matrix next_q = step.o.cwiseProduct(step.tanh_c);
    step.prev_q = std::move(q);
    step.prev_c = std::move(c);
    q = next_q;
    c = step.c;
    outputs.push_back(std::move(next_q));
    if (cache) cache->push_back(std::move(step));
  }
  return outputs;
}

std::vector<Matrix> Lstm::backward(const ParameterStore& store,
                                   const std::vector<LstmStepCache>& cache,
                                   const std::vector<Matrix>& d_outputs,
                                   ParameterStore& grads) const {
  const std::size_t steps = cache.size();
  std::vector<Matrix> d_inputs(steps);
  if (steps == 0) return d_inputs;
  const Matrix& w_f = store.at(name("w_f"));
  const Matrix& w_d = store.at(name("w_d"));
  const Matrix& w_c = store.at(name("w_c"));
  const Matrix& w_o = store.at(name("w_o"));
  Matrix& g_wf = grads.at(name("w_f"));
  Matrix& g_wd = grads.at(name("w_d"));
  Matrix& g_wc = grads.at(name("w_c"));
  Matrix& g_wo = grads.at(name("w_o"));
  Matrix& g_bf = grads.at(name("b_f"));
  Matrix& g_bd = grads.at(name("b_d"));
  Matrix& g_bc = grads.at(name("b_c"));
  Matrix& g_bo = grads.at(name("b_o"));

  const Index batch = cache.front().f.rows();
  const Index h = hidden_;
  Matrix dq_next = Matrix::Zero(batch, h);
  Matrix dc_next = Matrix::Zero(batch, h);
  for (std::size_t t = steps; t-- > 0;) {
    const LstmStepCache& s = cache[t];
    const Matrix dq = d_outputs[t] + dq_next;

    const Matrix d_o_pre =
        dq.cwiseProduct(s.tanh_c)
            .cwiseProduct((s.o.array() * (1.0 - s.o.array())).matrix());
    const Matrix d_out_input = d_o_pre * w_o.transpose();
    g_wo.noalias() += s.out_input.transpose() * d_o_pre;
    g_bo += d_o_pre.colwise().sum();

    const Matrix dc =
        dc_next +
        dq.cwiseProduct(s.o).cwiseProduct(
            (1.0 - s.tanh_c.array().square()).matrix()) +
        d_out_input.rightCols(h);

    const Matrix d_f_pre = dc.cwiseProduct(s.prev_c).cwiseProduct(
        (s.f.array() * (1.0 - s.f.array())).matrix());
    const Matrix d_d_pre = dc.cwiseProduct(s.g).cwiseProduct(
        (s.d.array() * (1.0 - s.d.array())).matrix());
    const Matrix d_g_pre = dc.cwiseProduct(s.d).cwiseProduct(
        (1.0 - s.g.array().square()).matrix());

    g_wf.noalias() += s.gate_input.transpose() * d_f_pre;
    g_wd.noalias() += s.gate_input.transpose() * d_d_pre;
    g_wc.noalias() += s.cell_input.transpose() * d_g_pre;
    g_bf += d_f_pre.colwise().sum();
    g_bd += d_d_pre.colwise().sum();
    g_bc += d_g_pre.colwise().sum();

    const Matrix d_gate_input = d_f_pre * w_f.transpose() + d_d_pre * w_d.transpose();
    const Matrix d_cell_input = d_g_pre * w_c.transpose();

    dq_next = d_gate_input.leftCols(h) + d_cell_input.leftCols(h) +
              d_out_input.leftCols(h);
    d_inputs[t] = d_gate_input.middleCols(h, input_) +
                  d_cell_input.middleCols(h, input_) +
                  d_out_input.middleCols(h, input_);
    dc_next = dc.cwiseProduct(s.f) + d_gate_input.rightCols(h);
  }
  return d_inputs;
}

}  // namespace crum::nn
