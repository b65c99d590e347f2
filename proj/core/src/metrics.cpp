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

#include "crum/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>

#include <nlohmann/json.hpp>

#include "crum/error.hpp"

namespace crum::metrics {
namespace {

void check_permutations(const data::Dataset& dataset,
                        std::span<const Permutation> permutations) {
  if (permutations.size() != dataset.requests.size()) {
    throw DomainError("one permutation per request is required");
  }
  for (std::size_t r = 0; r < permutations.size(); ++r) {
    if (permutations[r].size() != dataset.requests[r].size()) {
      throw DomainError("permutation length differs for request '" +
                        dataset.requests[r].id + "'");
    }
  }
}

double dcg(std::span<const int> labels, std::size_t k) {
  double total = 0.0;
  for (std::size_t r = 0; r < std::min(k, labels.size()); ++r) {
    total += labels[r] / std::log2(static_cast<double>(r) + 2.0);
  }
  return total;
}

}  // namespace

double average_precision(std::span<const int> labels) {
  double sum = 0.0;
  int hits = 0;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (labels[r] == 0) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(r + 1);
  }
  return hits == 0 ? 0.0 : sum / hits;
}

double ndcg_at_k(std::span<const int> labels, std::size_t k) {
  if (k == 0) throw DomainError("ndcg cutoff must be at least 1");
  std::vector<int> ideal(labels.begin(), labels.end());
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  const double best = dcg(ideal, k);
  return best == 0.0 ? 0.0 : dcg(labels, k) / best;
}

std::vector<int> labels_in_display_order(const data::RankedRequest& request,
                                         const Permutation& permutation) {
  std::vector<int> labels;
  labels.reserve(request.size());
  for (std::size_t item : permutation.display_order()) {
    labels.push_back(request.binary_labels[item]);
  }
  return labels;
}

UtilityMetrics oracle_utility_metrics(const data::Dataset& dataset,
                                      std::span<const Permutation> permutations,
                                      const clicks::ClickModelConfig& config) {
  check_permutations(dataset, permutations);
  UtilityMetrics out;
  double clicks = 0.0;
  std::size_t items = 0;
  for (std::size_t r = 0; r < permutations.size(); ++r) {
    const auto& request = dataset.requests[r];
    const auto relevance = request.relevance();
    for (double p : clicks::expected_clicks(request, permutations[r], config,
                                            relevance)) {
      clicks += p;
    }
    items += request.size();
  }
  if (!permutations.empty()) {
    out.clicks_per_list = clicks / static_cast<double>(permutations.size());
  }
  if (items > 0) out.ctr = clicks / static_cast<double>(items);
  return out;
}

double revenue_at_k(const data::Dataset& dataset,
                    std::span<const Permutation> permutations, std::size_t k) {
  if (k < 1) throw DomainError("revenue cutoff must be at least 1");
  check_permutations(dataset, permutations);
  if (permutations.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t r = 0; r < permutations.size(); ++r) {
    const auto& request = dataset.requests[r];
    if (!request.clicks) {
      throw DomainError("revenue needs logged clicks for '" + request.id + "'");
    }
    const auto order = permutations[r].display_order();
    for (std::size_t pos = 0; pos < std::min(k, order.size()); ++pos) {
      const std::size_t item = order[pos];
      total += request.bids[item] * (*request.clicks)[item];
    }
  }
  return total / static_cast<double>(permutations.size());
}

MetricsReport evaluate(const std::string& name, const data::Dataset& dataset,
                       std::span<const Permutation> permutations,
                       const clicks::ClickModelConfig& config) {
  check_permutations(dataset, permutations);
  MetricsReport report;
  report.name = name;
  report.num_requests = dataset.requests.size();
  double map = 0.0;
  std::map<std::size_t, double> ndcg;
  bool logged = !dataset.requests.empty();
  for (std::size_t r = 0; r < permutations.size(); ++r) {
    const auto labels =
        labels_in_display_order(dataset.requests[r], permutations[r]);
    map += average_precision(labels);
    for (std::size_t k : kNdcgCutoffs) ndcg[k] += ndcg_at_k(labels, k);
    logged = logged && dataset.requests[r].clicks.has_value();
  }
  const double count = std::max<double>(1.0, static_cast<double>(permutations.size()));
  report.map = map / count;
  for (std::size_t k : kNdcgCutoffs) report.ndcg[k] = ndcg[k] / count;
  const auto utility = oracle_utility_metrics(dataset, permutations, config);
  report.clicks_per_list = utility.clicks_per_list;
  report.ctr = utility.ctr;
  if (logged) {
    for (std::size_t k : kRevenueCutoffs) {
      report.revenue[k] = revenue_at_k(dataset, permutations, k);
    }
  }
  return report;
}

nlohmann::json to_json(const MetricsReport& report) {
  nlohmann::json out = {{"name", report.name},
                        {"num_requests", report.num_requests},
                        {"map", report.map},
                        {"clicks_per_list", report.clicks_per_list},
                        {"ctr", report.ctr}};
  for (const auto& [k, v] : report.ndcg) out["ndcg@" + std::to_string(k)] = v;
  for (const auto& [k, v] : report.revenue) {
    out["revenue@" + std::to_string(k)] = v;
  }
  return out;
}

MetricsReport report_from_json(const nlohmann::json& json) {
  MetricsReport report;
  report.name = json.at("name").get<std::string>();
  report.num_requests = json.at("num_requests").get<std::size_t>();
  report.map = json.at("map").get<double>();
  report.clicks_per_list = json.at("clicks_per_list").get<double>();
  report.ctr = json.at("ctr").get<double>();
  for (const auto& [key, value] : json.items()) {
    const auto at = key.find('@');
    if (at == std::string::npos) continue;
    const std::size_t k = std::stoul(key.substr(at + 1));
    if (key.starts_with("ndcg")) report.ndcg[k] = value.get<double>();
    if (key.starts_with("revenue")) report.revenue[k] = value.get<double>();
  }
  return report;
}

void write_csv(std::span<const MetricsReport> reports, std::ostream& out) {
  const auto old_precision = out.precision(10);
  out << "name,map";
  for (std::size_t k : kNdcgCutoffs) out << ",ndcg@" << k;
  out << ",clicks_per_list,ctr";
  for (std::size_t k : kRevenueCutoffs) out << ",revenue@" << k;
  out << ",num_requests\n";
  for (const auto& r : reports) {
    out << r.name << ',' << r.map;
    for (std::size_t k : kNdcgCutoffs) {
      out << ',';
      if (auto it = r.ndcg.find(k); it != r.ndcg.end()) out << it->second;
    }
    out << ',' << r.clicks_per_list << ',' << r.ctr;
    for (std::size_t k : kRevenueCutoffs) {
      out << ',';
      if (auto it = r.revenue.find(k); it != r.revenue.end()) out << it->second;
    }
    out << ',' << r.num_requests << '\n';
  }
  out.precision(old_precision);
}

}  // namespace crum::metrics
