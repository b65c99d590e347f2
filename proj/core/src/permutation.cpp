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

#include "crum/permutation.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "crum/error.hpp"

namespace crum {

Permutation::Permutation(std::vector<int> positions)
    : positions_(std::move(positions)) {
  if (!is_bijection(positions_)) {
    throw DomainError("permutation is not a bijection onto {1.." +
                      std::to_string(positions_.size()) + "}");
  }
}

Permutation Permutation::identity(std::size_t n) {
  std::vector<int> positions(n);
  std::iota(positions.begin(), positions.end(), 1);
  return Permutation(std::move(positions));
}

Permutation Permutation::from_order(std::span<const std::size_t> order) {
  std::vector<int> positions(order.size(), 0);
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (order[k] >= order.size()) {
      throw DomainError("display order references item " +
                        std::to_string(order[k]) + " out of range");
    }
    positions[order[k]] = static_cast<int>(k) + 1;
  }
  return Permutation(std::move(positions));
}

Permutation Permutation::from_scores(std::span<const double> scores,
                                     std::span<const int> tie_key) {
  if (scores.size() != tie_key.size()) {
    throw DomainError("scores and tie keys differ in length");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    if (tie_key[a] != tie_key[b]) return tie_key[a] < tie_key[b];
    return a < b;
  });
  return from_order(order);
}

bool Permutation::is_bijection(std::span<const int> positions) {
  const auto n = static_cast<int>(positions.size());
  std::vector<bool> seen(positions.size(), false);
  for (int p : positions) {
    if (p < 1 || p > n || seen[p - 1]) return false;
    seen[p - 1] = true;
  }
  return true;
}

std::vector<std::size_t> Permutation::display_order() const {
  std::vector<std::size_t> order(positions_.size());
  for (std::size_t i = 0; i < positions_.size(); ++i) {
    order[positions_[i] - 1] = i;
  }
  return order;
}

Permutation Permutation::swapped(std::size_t a, std::size_t b) const {
  if (a >= size() || b >= size()) {
    throw DomainError("swap index out of range");
  }
  Permutation result = *this;
  std::swap(result.positions_[a], result.positions_[b]);
  return result;
}

Permutation Permutation::reversed() const {
  Permutation result = *this;
  const int n = static_cast<int>(size());
  for (int& p : result.positions_) p = n + 1 - p;
  return result;
}

}  // namespace crum
