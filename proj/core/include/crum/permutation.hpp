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

#ifndef CRUM_PERMUTATION_HPP_
#define CRUM_PERMUTATION_HPP_

#include <cstddef>
#include <span>
#include <vector>

namespace crum {

// Maps item index -> 1-based display position. A valid permutation is a
// bijection onto {1..n}.
class Permutation {
 public:
  Permutation() = default;

  // Throws DomainError unless `positions` is a bijection onto {1..n}.
  explicit Permutation(std::vector<int> positions);

  static Permutation identity(std::size_t n);

  // Builds the permutation that displays `order[0]` first, `order[1]`
  // second and so on. `order` must list every item index exactly once.
  static Permutation from_order(std::span<const std::size_t> order);

  // Orders items by descending score; ties go to the smaller `tie_key`.
  static Permutation from_scores(std::span<const double> scores,
                                 std::span<const int> tie_key);

  static bool is_bijection(std::span<const int> positions);

  std::size_t size() const { return positions_.size(); }
  int position(std::size_t item) const { return positions_[item]; }
  const std::vector<int>& positions() const { return positions_; }

  // Item indices sorted by display position.
  std::vector<std::size_t> display_order() const;

  // Exchanges the display positions of items `a` and `b`.
  Permutation swapped(std::size_t a, std::size_t b) const;

  // Item at position k is moved to position n + 1 - k.
  Permutation reversed() const;

  bool operator==(const Permutation&) const = default;

 private:
  std::vector<int> positions_;
};

}  // namespace crum

#endif  // CRUM_PERMUTATION_HPP_
