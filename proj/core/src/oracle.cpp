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

#include "crum/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "crum/error.hpp"
#include "crum/random.hpp"

namespace crum::oracle {
namespace {

constexpr std::size_t kBatch = 240;

void check_cap(std::size_t n, std::size_t n_cap) {
  if (n > n_cap) {
    throw RefusalError("exhaustive search over " + std::to_string(n) +
                       " items exceeds the cap of " + std::to_string(n_cap));
  }
}

void consider(OracleResult& result, const Permutation& perm, double value,
              bool keep_all) {
  if (result.visited == 0 || value > result.best_utility) {
    result.best = perm;
    result.best_utility = value;
  }
  ++result.visited;
  if (keep_all) result.utilities.emplace_back(perm, value);
}

}  // namespace

OracleResult enumerate_best_permutation(std::size_t n, const UtilityFn& utility,
                                        std::size_t n_cap, bool keep_all) {
  return enumerate_best_permutation(
      n,
      BatchUtilityFn([&utility](std::span<const Permutation> perms) {
        std::vector<double> values;
        values.reserve(perms.size());
        for (const auto& p : perms) values.push_back(utility(p));
        return values;
      }),
      n_cap, keep_all);
}

OracleResult enumerate_best_permutation(std::size_t n,
                                        const BatchUtilityFn& utility,
                                        std::size_t n_cap, bool keep_all) {
  check_cap(n, n_cap);
  OracleResult result;
  std::vector<int> positions(n);
  std::iota(positions.begin(), positions.end(), 1);
  std::vector<Permutation> pending;
  auto flush = [&] {
    const auto values = utility(pending);
    if (values.size() != pending.size()) {
      throw DomainError("utility function returned the wrong number of values");
    }
    for (std::size_t k = 0; k < pending.size(); ++k) {
      consider(result, pending[k], values[k], keep_all);
    }
    pending.clear();
  };
  do {
    pending.emplace_back(positions);
    if (pending.size() == kBatch) flush();
  } while (std::next_permutation(positions.begin(), positions.end()));
  if (!pending.empty()) flush();
  return result;
}

MonteCarloEstimate monte_carlo_utility(const data::RankedRequest& request,
                                       const Permutation& permutation,
                                       const clicks::ClickModelConfig& config,
                                       std::span<const double> relevance,
                                       std::span<const double> weights,
                                       std::size_t trials, std::uint64_t seed) {
  if (trials == 0) throw DomainError("monte carlo needs at least one trial");
  if (weights.size() != request.size()) {
    throw DomainError("monte carlo: one weight per item is required");
  }
  // Welford accumulation keeps the variance stable for long runs.
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto log = clicks::sample_clicks(request, permutation, config,
                                           relevance, derive_seed(seed, t));
    double value = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      value += log.clicks[i] * weights[i];
    }
    const double step = value - mean;
    mean += step / static_cast<double>(t + 1);
    m2 += step * (value - mean);
  }
  MonteCarloEstimate out;
  out.mean = mean;
  if (trials > 1) {
    const double variance = m2 / static_cast<double>(trials - 1);
    out.standard_error = std::sqrt(variance / static_cast<double>(trials));
  }
  return out;
}

namespace {
constexpr double kRoundoffUlps = 64.0;
}  // namespace

GradcheckResult finite_difference_gradcheck(const LossFn& loss,
                                            const ParameterStore& params,
                                            double epsilon) {
  if (!(epsilon > 0.0)) throw DomainError("gradcheck epsilon must be > 0");
  ParameterStore analytic = params.zeros_like();
  const double base = loss(params, &analytic);
  if (!std::isfinite(base)) throw NumericError("gradcheck: loss is not finite");

  ParameterStore probe = params;
  GradcheckResult result;
  for (std::size_t e = 0; e < probe.entries().size(); ++e) {
    auto& entry = probe.entries()[e];
    const Matrix& grad = analytic.entries()[e].value;
    for (Index k = 0; k < entry.value.size(); ++k) {
      double& x = entry.value.data()[k];
      const double saved = x;
      x = saved + epsilon;
      const double plus = loss(probe, nullptr);
      x = saved - epsilon;
      const double minus = loss(probe, nullptr);
      x = saved;
      if (!std::isfinite(plus) || !std::isfinite(minus)) {
        throw NumericError("gradcheck: loss is not finite near " + entry.name);
      }
      const double numeric = (plus - minus) / (2.0 * epsilon);
      const double a = grad.data()[k];
      // Differences below the rounding resolution of the difference quotient
      // count as agreement; otherwise an exactly zero gradient is judged
      // against pure round-off.
      const double resolution = kRoundoffUlps * std::numeric_limits<double>::epsilon() *
                                std::max({std::abs(plus), std::abs(minus), 1.0}) / epsilon;
      const double diff = std::abs(numeric - a);
      const double denom =
          std::max({std::abs(numeric), std::abs(a), 1e-8});
      const double rel = diff <= resolution ? 0.0 : diff / denom;
      result.max_absolute_error = std::max(result.max_absolute_error, diff);
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_tensor = entry.name;
      }
      ++result.coordinates;
    }
  }
  return result;
}

nlohmann::json to_json(const OracleResult& result) {
  nlohmann::json out = {{"best_positions", result.best.positions()},
                        {"best_utility", result.best_utility},
                        {"visited", result.visited}};
  if (!result.utilities.empty()) {
    auto& table = out["utilities"] = nlohmann::json::array();
    for (const auto& [perm, value] : result.utilities) {
      table.push_back({{"positions", perm.positions()}, {"utility", value}});
    }
  }
  return out;
}

}  // namespace crum::oracle
