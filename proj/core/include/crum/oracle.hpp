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

#ifndef CRUM_ORACLE_HPP_
#define CRUM_ORACLE_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "crum/click_model.hpp"
#include "crum/dataset.hpp"
#include "crum/parameter_store.hpp"
#include "crum/permutation.hpp"

namespace crum::oracle {

struct OracleResult {
  Permutation best;
  double best_utility = 0.0;
  std::size_t visited = 0;
  // Every (permutation, utility) pair, in enumeration order, when requested.
  std::vector<std::pair<Permutation, double>> utilities;
};

using UtilityFn = std::function<double(const Permutation&)>;
// Scores a batch of permutations at once; result[k] belongs to perms[k].
using BatchUtilityFn =
    std::function<std::vector<double>(std::span<const Permutation>)>;

inline constexpr std::size_t kDefaultCap = 7;

// Exhaustive search over all n! permutations in lexicographic order of the
// position vector; the first maximiser wins ties. RefusalError if n > n_cap.
OracleResult enumerate_best_permutation(std::size_t n, const UtilityFn& utility,
                                        std::size_t n_cap = kDefaultCap,
                                        bool keep_all = false);
OracleResult enumerate_best_permutation(std::size_t n,
                                        const BatchUtilityFn& utility,
                                        std::size_t n_cap = kDefaultCap,
                                        bool keep_all = false);

struct MonteCarloEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
};

// Samples oracle clicks `trials` times and averages Σ_i c_i · w_i.
MonteCarloEstimate monte_carlo_utility(const data::RankedRequest& request,
                                       const Permutation& permutation,
                                       const clicks::ClickModelConfig& config,
                                       std::span<const double> relevance,
                                       std::span<const double> weights,
                                       std::size_t trials, std::uint64_t seed);

// Loss at `params`; writes the analytic gradient into `grads` when non-null.
using LossFn =
    std::function<double(const ParameterStore& params, ParameterStore* grads)>;

struct GradcheckResult {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::size_t coordinates = 0;
  std::string worst_tensor;
};

// Central differences on every coordinate against the analytic gradient.
// Relative error uses the denominator max(|numeric|, |analytic|, 1e-8);
// differences within the rounding resolution of the difference quotient
// (64 ulp of the loss divided by epsilon) count as zero error.
GradcheckResult finite_difference_gradcheck(const LossFn& loss,
                                            const ParameterStore& params,
                                            double epsilon = 1e-5);

nlohmann::json to_json(const OracleResult& result);

}  // namespace crum::oracle

#endif  // CRUM_ORACLE_HPP_
