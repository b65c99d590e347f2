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

#include "crum/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "crum/error.hpp"

namespace crum::pipeline {

using nlohmann::json;

json to_json(const ReportRow& row) {
  return {{"run", row.run},
          {"role", row.role},
          {"variant", row.variant},
          {"initial_ranker", row.initial_ranker},
          {"pairs_per_list", row.pairs_per_list},
          {"metrics", metrics::to_json(row.metrics)}};
}

ReportRow report_row_from_json(const json& j) {
  ReportRow row;
  row.run = j.at("run").get<std::string>();
  row.role = j.at("role").get<std::string>();
  row.variant = j.at("variant").get<std::string>();
  row.initial_ranker = j.at("initial_ranker").get<std::string>();
  row.pairs_per_list = j.at("pairs_per_list").get<std::size_t>();
  row.metrics = metrics::report_from_json(j.at("metrics"));
  return row;
}

std::vector<ReportRow> load_run_rows(const std::filesystem::path& run_dir) {
  const auto path = run_dir / "reports" / "metrics.json";
  std::ifstream in(path);
  if (!in) {
    throw DependencyError("no evaluate output in " + run_dir.string() +
                          " (run the 'evaluate' stage first)");
  }
  const json doc = json::parse(in);
  std::vector<ReportRow> rows;
  for (const auto& r : doc.at("rows")) rows.push_back(report_row_from_json(r));
  return rows;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

double metric_value(const metrics::MetricsReport& m, const std::string& name) {
  if (name == "map") return m.map;
  if (name == "clicks_per_list") return m.clicks_per_list;
  if (name == "ctr") return m.ctr;
  if (name == "ndcg@5") return m.ndcg.at(5);
  if (name == "ndcg@10") return m.ndcg.at(10);
  throw ConfigError("unknown metric " + name);
}

std::string row_label(const ReportRow& row) {
  std::string label = row.role == "crum" ? row.variant : row.role;
  if (row.role == "initial") label += "(" + row.initial_ranker + ")";
  return row.run.empty() ? label : row.run + "/" + label;
}

}  // namespace

void write_line_chart(const std::filesystem::path& path,
                      const std::string& title, const std::string& x_label,
                      const std::string& y_label,
                      std::span<const Series> series) {
  constexpr double kWidth = 640, kHeight = 420;
  constexpr double kLeft = 70, kRight = 160, kTop = 40, kBottom = 50;
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                  "#ff7f0e", "#9467bd", "#8c564b"};
  double x_min = INFINITY, x_max = -INFINITY, y_min = INFINITY, y_max = -INFINITY;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      x_min = std::min(x_min, x), x_max = std::max(x_max, x);
      y_min = std::min(y_min, y), y_max = std::max(y_max, y);
    }
  }
  if (!std::isfinite(x_min)) x_min = 0, x_max = 1, y_min = 0, y_max = 1;
  if (x_max == x_min) x_min -= 0.5, x_max += 0.5;
  if (y_max == y_min) y_min -= 0.5 * std::max(1e-3, std::abs(y_min)), y_max += 0.5 * std::max(1e-3, std::abs(y_max));
  const double pad = 0.05 * (y_max - y_min);
  y_min -= pad, y_max += pad;
  const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * plot_w; };
  auto py = [&](double y) { return kTop + (1.0 - (y - y_min) / (y_max - y_min)) * plot_h; };

  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << escape(title) << "</text>\n"
      << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w
      << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = x_min + (x_max - x_min) * t / 4.0;
    const double yv = y_min + (y_max - y_min) * t / 4.0;
    out << "<text x=\"" << px(xv) << "\" y=\"" << kTop + plot_h + 16
        << "\" text-anchor=\"middle\">" << fmt(xv) << "</text>\n"
        << "<text x=\"" << kLeft - 6 << "\" y=\"" << py(yv) + 4
        << "\" text-anchor=\"end\">" << fmt(yv) << "</text>\n"
        << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft + plot_w << "\" y1=\"" << py(yv)
        << "\" y2=\"" << py(yv) << "\" stroke=\"#ddd\"/>\n";
  }
  out << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 12
      << "\" text-anchor=\"middle\">" << escape(x_label) << "</text>\n"
      << "<text transform=\"translate(16," << kTop + plot_h / 2
      << ") rotate(-90)\" text-anchor=\"middle\">" << escape(y_label) << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % std::size(kColors)];
    auto points = series[s].points;
    std::sort(points.begin(), points.end());
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& [x, y] : points) out << px(x) << ',' << py(y) << ' ';
    out << "\"/>\n";
    for (const auto& [x, y] : points) {
      out << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"3\" fill=\""
          << color << "\"/>\n";
    }
    const double ly = kTop + 14 + 18 * static_cast<double>(s);
    out << "<line x1=\"" << kWidth - kRight + 12 << "\" x2=\"" << kWidth - kRight + 32
        << "\" y1=\"" << ly << "\" y2=\"" << ly << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << kWidth - kRight + 38 << "\" y=\"" << ly + 4 << "\">"
        << escape(series[s].name) << "</text>\n";
  }
  out << "</svg>\n";
}

std::vector<std::filesystem::path> emit_report(
    std::vector<ReportRow> rows, const std::filesystem::path& out_dir) {
  if (rows.empty()) throw DependencyError("no completed runs to report");
  std::filesystem::create_directories(out_dir);
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return a.metrics.ctr > b.metrics.ctr;
  });
  std::vector<std::filesystem::path> written;

  std::vector<metrics::MetricsReport> table;
  json doc = json::array();
  for (const auto& row : rows) {
    table.push_back(row.metrics);
    table.back().name = row_label(row);
    doc.push_back(to_json(row));
  }
  {
    const auto path = out_dir / "table.csv";
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    metrics::write_csv(table, out);
    written.push_back(path);
  }
  {
    const auto path = out_dir / "table.json";
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << json{{"rows", doc}}.dump(2) << '\n';
    written.push_back(path);
  }

  static const std::vector<std::string> kMetrics = {"map", "ndcg@5", "ndcg@10",
                                                    "clicks_per_list", "ctr"};
  // Metric against the number of sampled pairs, one line per variant.
  std::map<std::string, std::set<std::size_t>> pair_counts;
  for (const auto& row : rows) {
    if (row.role == "crum") pair_counts[row.variant].insert(row.pairs_per_list);
  }
  const bool sweep = std::any_of(pair_counts.begin(), pair_counts.end(),
                                 [](const auto& kv) { return kv.second.size() > 1; });
  if (sweep) {
    for (const auto& metric : kMetrics) {
      std::map<std::string, Series> by_variant;
      for (const auto& row : rows) {
        if (row.role != "crum") continue;
        auto& s = by_variant[row.variant];
        s.name = row.variant;
        s.points.emplace_back(static_cast<double>(row.pairs_per_list),
                              metric_value(row.metrics, metric));
      }
      std::vector<Series> series;
      for (auto& [_, s] : by_variant) series.push_back(std::move(s));
      std::string file = metric;
      std::replace(file.begin(), file.end(), '@', '_');
      const auto path = out_dir / ("pairs_" + file + ".svg");
      write_line_chart(path, metric + " vs sampled pairs per list",
                       "pairs per list", metric, series);
      written.push_back(path);
    }
  }

  // CTR against the quality (CTR) of the initial ranker.
  std::map<std::string, double> initial_ctr;  // keyed by run
  std::set<std::string> kinds;
  for (const auto& row : rows) {
    if (row.role == "initial") {
      initial_ctr[row.run] = row.metrics.ctr;
      kinds.insert(row.initial_ranker);
    }
  }
  if (kinds.size() > 1) {
    std::map<std::string, Series> by_role;
    for (const auto& row : rows) {
      const auto it = initial_ctr.find(row.run);
      if (it == initial_ctr.end()) continue;
      const std::string name = row.role == "crum" ? row.variant : row.role;
      auto& s = by_role[name];
      s.name = name;
      s.points.emplace_back(it->second, row.metrics.ctr);
    }
    std::vector<Series> series;
    for (auto& [_, s] : by_role) series.push_back(std::move(s));
    const auto path = out_dir / "initial_quality_ctr.svg";
    write_line_chart(path, "CTR vs initial ranker quality", "initial ranker CTR",
                     "ctr", series);
    written.push_back(path);
  }
  return written;
}

}  // namespace crum::pipeline
