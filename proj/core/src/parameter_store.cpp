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

#include "crum/parameter_store.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "crum/error.hpp"

namespace crum {
namespace {

constexpr char kMagic[8] = {'C', 'R', 'U', 'M', 'P', 'A', 'R', 'M'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "parameter files are written in host order");

template <typename T>
void write_pod(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw SchemaError("truncated parameter file");
  return value;
}

}  // namespace

Matrix& ParameterStore::add(const std::string& name, Index rows, Index cols) {
  if (index_.contains(name)) {
    throw ConfigError("duplicate parameter '" + name + "'");
  }
  index_.emplace(name, entries_.size());
  entries_.push_back({name, Matrix::Zero(rows, cols)});
  return entries_.back().value;
}

Matrix& ParameterStore::at(std::string_view name) {
  const auto it = index_.find(std::string(name));
  if (it == index_.end()) {
    throw ConfigError("missing parameter '" + std::string(name) + "'");
  }
  return entries_[it->second].value;
}

const Matrix& ParameterStore::at(std::string_view name) const {
  return const_cast<ParameterStore*>(this)->at(name);
}

bool ParameterStore::contains(std::string_view name) const {
  return index_.contains(std::string(name));
}

std::size_t ParameterStore::num_scalars() const {
  std::size_t total = 0;
  for (const auto& e : entries_) total += static_cast<std::size_t>(e.value.size());
  return total;
}

ParameterStore ParameterStore::zeros_like() const {
  ParameterStore out;
  for (const auto& e : entries_) out.add(e.name, e.value.rows(), e.value.cols());
  return out;
}

void ParameterStore::set_zero() {
  for (auto& e : entries_) e.value.setZero();
}

ParameterStore ParameterStore::subset(std::string_view prefix) const {
  ParameterStore out;
  for (const auto& e : entries_) {
    if (std::string_view(e.name).starts_with(prefix)) {
      out.add(e.name, e.value.rows(), e.value.cols()) = e.value;
    }
  }
  return out;
}

void ParameterStore::merge(const ParameterStore& other) {
  for (const auto& e : other.entries_) {
    add(e.name, e.value.rows(), e.value.cols()) = e.value;
  }
}

void ParameterStore::assign_from(const ParameterStore& other) {
  for (const auto& e : other.entries_) {
    if (!contains(e.name)) continue;
    Matrix& target = at(e.name);
    if (target.rows() != e.value.rows() || target.cols() != e.value.cols()) {
      throw ConfigError("shape mismatch for parameter '" + e.name + "'");
    }
    target = e.value;
  }
}

bool ParameterStore::same_values(const ParameterStore& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = other.entries_[i];
    if (a.name != b.name || a.value.rows() != b.value.rows() ||
        a.value.cols() != b.value.cols()) {
      return false;
    }
    if (std::memcmp(a.value.data(), b.value.data(),
                    sizeof(double) * static_cast<std::size_t>(a.value.size())) !=
        0) {
      return false;
    }
  }
  return true;
}

void ParameterStore::save(const std::filesystem::path& path) const {
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& e : entries_) {
    tensors.push_back(
        {{"name", e.name}, {"rows", e.value.rows()}, {"cols", e.value.cols()}});
  }
  const std::string header =
      nlohmann::json{{"metadata", metadata}, {"tensors", std::move(tensors)}}
          .dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  write_pod<std::uint32_t>(out, kVersion);
  write_pod<std::uint64_t>(out, header.size());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const auto& e : entries_) {
    for (Index r = 0; r < e.value.rows(); ++r) {
      for (Index c = 0; c < e.value.cols(); ++c) write_pod(out, e.value(r, c));
    }
  }
  if (!out) throw IoError("failed writing " + path.string());
}

ParameterStore ParameterStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw SchemaError(path.string() + " is not a parameter file");
  }
  if (read_pod<std::uint32_t>(in) != kVersion) {
    throw SchemaError(path.string() + ": unsupported parameter file version");
  }
  const auto header_size = read_pod<std::uint64_t>(in);
  std::string header(header_size, '\0');
  in.read(header.data(), static_cast<std::streamsize>(header_size));
  if (!in) throw SchemaError("truncated parameter header");
  ParameterStore store;
  try {
    const auto doc = nlohmann::json::parse(header);
    store.metadata =
        doc.at("metadata").get<std::map<std::string, std::string>>();
    for (const auto& t : doc.at("tensors")) {
      Matrix& value = store.add(t.at("name").get<std::string>(),
                                t.at("rows").get<Index>(),
                                t.at("cols").get<Index>());
      for (Index r = 0; r < value.rows(); ++r) {
        for (Index c = 0; c < value.cols(); ++c) {
          value(r, c) = read_pod<double>(in);
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  return store;
}

ParameterStore ParameterStore::load_checked(const std::filesystem::path& path,
                                            std::string_view expected_hash,
                                            bool allow_mismatch) {
  ParameterStore store = load(path);
  const auto it = store.metadata.find("config_hash");
  const std::string found = it == store.metadata.end() ? "" : it->second;
  if (found != expected_hash && !allow_mismatch) {
    throw ConfigError(path.string() + " was produced with config hash '" +
                      found + "', expected '" + std::string(expected_hash) +
                      "'");
  }
  return store;
}

}  // namespace crum
