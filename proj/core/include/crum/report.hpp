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

#ifndef CRUM_REPORT_HPP_
#define CRUM_REPORT_HPP_

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "crum/metrics.hpp"

namespace crum::pipeline {

// One evaluated ranking of a test set together with the knobs that the
// comparison plots are keyed on.
struct ReportRow {
  std::string run;             // run directory label
  std::string role;            // "initial", "greedy" or "crum"
  std::string variant;         // e.g. "crum(-BL)"
  std::string initial_ranker;  // pointwise | random | reverse
  std::size_t pairs_per_list = 0;
  metrics::MetricsReport metrics;
};

nlohmann::json to_json(const ReportRow& row);
ReportRow report_row_from_json(const nlohmann::json& json);

// Rows stored by the evaluate stage of a run directory.
std::vector<ReportRow> load_run_rows(const std::filesystem::path& run_dir);

// Writes table.csv and table.json (rows sorted by descending CTR) plus SVG
// plots: one per metric against the sampled-pair count when the rows span
// several pair counts, and CTR against initial-ranker quality when they span
// several initial rankers. Returns the written paths. DependencyError when
// `rows` is empty.
std::vector<std::filesystem::path> emit_report(std::vector<ReportRow> rows,
                                               const std::filesystem::path& out_dir);

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

// Minimal static line chart.
void write_line_chart(const std::filesystem::path& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      std::span<const Series> series);

}  // namespace crum::pipeline

#endif  // CRUM_REPORT_HPP_
