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

#ifndef CRUM_PARAMETER_STORE_HPP_
#define CRUM_PARAMETER_STORE_HPP_

#include <deque>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "crum/tensor.hpp"

namespace crum {

// Ordered collection of named 2-D tensors plus a string metadata header.
// References returned by add()/at() stay valid for the store's lifetime.
//
// File layout (little-endian):
//   8 bytes   magic "CRUMPARM"
//   u32       format version (1)
//   u64       header length in bytes
//   header    UTF-8 JSON {"metadata": {...}, "tensors": [{"name","rows","cols"}]}
//   payload   IEEE-754 doubles of every tensor in header order, row-major
class ParameterStore {
 public:
  struct Entry {
    std::string name;
    Matrix value;
  };

  // Adds a zero-filled tensor; throws ConfigError on a duplicate name.
  Matrix& add(const std::string& name, Index rows, Index cols);

  Matrix& at(std::string_view name);
  const Matrix& at(std::string_view name) const;
  bool contains(std::string_view name) const;

  std::size_t size() const { return entries_.size(); }
  std::size_t num_scalars() const;
  const std::deque<Entry>& entries() const { return entries_; }
  std::deque<Entry>& entries() { return entries_; }

  // Same names and shapes, all zeros, no metadata.
  ParameterStore zeros_like() const;
  void set_zero();

  // Tensors whose name starts with `prefix`.
  ParameterStore subset(std::string_view prefix) const;
  // Appends every tensor of `other`; names must not collide.
  void merge(const ParameterStore& other);
  // Overwrites values of tensors present in both stores.
  void assign_from(const ParameterStore& other);

  // Bitwise equality of names, shapes and values (metadata ignored).
  bool same_values(const ParameterStore& other) const;

  std::map<std::string, std::string> metadata;

  void save(const std::filesystem::path& path) const;
  static ParameterStore load(const std::filesystem::path& path);

  // Loads and verifies metadata["config_hash"]; a mismatch is a
  // ConfigError unless `allow_mismatch` is set.
  static ParameterStore load_checked(const std::filesystem::path& path,
                                     std::string_view expected_hash,
                                     bool allow_mismatch = false);

 private:
  std::deque<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace crum

#endif  // CRUM_PARAMETER_STORE_HPP_
