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

#include "crum/click_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "crum/error.hpp"
#include "crum/random.hpp"

namespace crum::clicks {
namespace {

void check_inputs(const data::RankedRequest& request,
                  const Permutation& permutation,
                  std::span<const double> relevance) {
  const std::size_t n = request.size();
  if (permutation.size() != n ||
      !Permutation::is_bijection(permutation.positions())) {
    throw DomainError("permutation is not a bijection over the request");
  }
  if (relevance.size() != n) {
    throw DomainError("relevance vector length differs from list length");
  }
  for (double r : relevance) {
    if (!(r >= 0.0 && r <= 1.0)) {
      throw DomainError("relevance probability outside [0, 1]");
    }
  }
}

// Pairwise similarity table; row i, column j is sim(i | last click j).
Matrix similarity_table(const Matrix& features) {
  const Index n = features.rows();
  Matrix sim(n, n);
  const Vector norms = features.rowwise().norm();
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (norms(i) == 0.0 || norms(j) == 0.0) {
        sim(i, j) = 0.0;
      } else {
        const double cosine =
            features.row(i).dot(features.row(j)) / (norms(i) * norms(j));
        sim(i, j) = std::clamp(cosine, 0.0, 1.0);
      }
    }
  }
  return sim;
}

}  // namespace

double position_decay(int position, double eta) {
  if (position < 1) throw DomainError("position must be >= 1");
  if (!(eta >= 0.0)) throw DomainError("eta must be >= 0");
  return std::pow(static_cast<double>(position), -eta);
}

double similarity_prob(const RowVector& current,
                       const std::optional<RowVector>& last_clicked) {
  if (!last_clicked) return 1.0;
  if (current.size() != last_clicked->size()) {
    throw DomainError("similarity of vectors with different dimensions");
  }
  const double a = current.norm();
  const double b = last_clicked->norm();
  if (a == 0.0 || b == 0.0) return 0.0;
  return std::clamp(current.dot(*last_clicked) / (a * b), 0.0, 1.0);
}

ClickLog sample_clicks(const data::RankedRequest& request,
                       const Permutation& permutation,
                       const ClickModelConfig& config,
                       std::span<const double> relevance, std::uint64_t seed) {
  check_inputs(request, permutation, relevance);
  Rng rng(seed);
  ClickLog log{request.id, permutation, std::vector<int>(request.size(), 0)};
  std::optional<RowVector> last;
  for (std::size_t item : permutation.display_order()) {
    const RowVector x = request.features.row(static_cast<Index>(item));
    const double p = relevance[item] *
                     position_decay(permutation.position(item), config.eta) *
                     similarity_prob(x, last);
    // Always consume a draw so the stream layout is independent of outcomes.
    if (rng.uniform() < p) {
      log.clicks[item] = 1;
      last = x;
    }
  }
  return log;
}

std::vector<double> expected_clicks(const data::RankedRequest& request,
                                    const Permutation& permutation,
                                    const ClickModelConfig& config,
                                    std::span<const double> relevance) {
  check_inputs(request, permutation, relevance);
  const std::size_t n = request.size();
  const Matrix sim = similarity_table(request.features);
  // mass[s] for s < n: last click was item s; mass[n]: no click yet.
  std::vector<double> mass(n + 1, 0.0);
  mass[n] = 1.0;
  std::vector<double> marginal(n, 0.0);
  for (std::size_t item : permutation.display_order()) {
    const double base =
        relevance[item] * position_decay(permutation.position(item), config.eta);
    if (base == 0.0) continue;
    double clicked = 0.0;
    for (std::size_t s = 0; s <= n; ++s) {
      if (mass[s] == 0.0) continue;
      const double similarity =
          s == n ? 1.0
                 : sim(static_cast<Index>(item), static_cast<Index>(s));
      const double moved = mass[s] * base * similarity;
      clicked += moved;
      mass[s] -= moved;
    }
    mass[item] += clicked;
    marginal[item] = clicked;
  }
  return marginal;
}

std::vector<ClickLog> simulate_dataset(data::Dataset& dataset,
                                       const ClickModelConfig& config,
                                       std::uint64_t seed) {
  std::vector<ClickLog> logs;
  logs.reserve(dataset.requests.size());
  for (std::size_t r = 0; r < dataset.requests.size(); ++r) {
    auto& request = dataset.requests[r];
    const auto rel = request.relevance();
    logs.push_back(sample_clicks(request, request.initial, config, rel,
                                 derive_seed(seed, r)));
    request.clicks = logs.back().clicks;
  }
  return logs;
}

void save_click_logs(std::span<const ClickLog> logs,
                     const std::filesystem::path& path) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& log : logs) {
    entries.push_back({{"request_id", log.request_id},
                       {"positions", log.permutation.positions()},
                       {"clicks", log.clicks}});
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << nlohmann::json{{"format", "crum-clicklog"},
                        {"version", 1},
                        {"logs", std::move(entries)}}
             .dump()
      << '\n';
}

std::vector<ClickLog> load_click_logs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    const auto archive = nlohmann::json::parse(in);
    if (archive.at("format") != "crum-clicklog" || archive.at("version") != 1) {
      throw SchemaError(path.string() + " is not a click-log archive");
    }
    std::vector<ClickLog> logs;
    for (const auto& entry : archive.at("logs")) {
      ClickLog log{entry.at("request_id").get<std::string>(),
                   Permutation(entry.at("positions").get<std::vector<int>>()),
                   entry.at("clicks").get<std::vector<int>>()};
      if (log.clicks.size() != log.permutation.size()) {
        throw SchemaError("click log '" + log.request_id +
                          "' has mismatched lengths");
      }
      logs.push_back(std::move(log));
    }
    return logs;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

void attach_click_logs(data::Dataset& dataset, std::span<const ClickLog> logs) {
  std::unordered_map<std::string, const ClickLog*> by_id;
  for (const auto& log : logs) by_id[log.request_id] = &log;
  for (auto& request : dataset.requests) {
    const auto it = by_id.find(request.id);
    if (it == by_id.end()) {
      throw SchemaError("no click log for request '" + request.id + "'");
    }
    if (!(it->second->permutation == request.initial)) {
      throw SchemaError("click log for '" + request.id +
                        "' was recorded under a different permutation");
    }
    request.clicks = it->second->clicks;
  }
}

}  // namespace crum::clicks
