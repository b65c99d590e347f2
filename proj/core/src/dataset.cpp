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

#include "crum/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "crum/error.hpp"
#include "crum/random.hpp"

namespace crum::data {
namespace {

constexpr int kMaxGrade = 4;
constexpr char kArchiveFormat[] = "crum-dataset";
constexpr int kArchiveVersion = 1;

struct ParsedLine {
  int label = 0;
  std::string qid;
  std::vector<std::pair<std::size_t, double>> values;
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view token, std::size_t line_no) {
  // std::from_chars for double is available in libstdc++ >= 11.
  double value = 0.0;
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw ParseError(line_no, "bad number '" + std::string(token) + "'");
  }
  return value;
}

ParsedLine parse_line(std::string_view line, std::size_t line_no) {
  ParsedLine parsed;
  std::size_t pos = 0;
  std::vector<std::string_view> tokens;
  while (pos < line.size()) {
    const auto start = line.find_first_not_of(" \t", pos);
    if (start == std::string_view::npos) break;
    const auto stop = line.find_first_of(" \t", start);
    tokens.push_back(line.substr(start, stop - start));
    pos = stop == std::string_view::npos ? line.size() : stop;
  }
  if (tokens.size() < 2) {
    throw ParseError(line_no, "expected '<label> qid:<id> ...'");
  }
  const double label = parse_double(tokens[0], line_no);
  if (label != std::floor(label) || label < 0 || label > kMaxGrade) {
    throw ParseError(line_no, "label must be an integer in 0..4");
  }
  parsed.label = static_cast<int>(label);
  if (tokens[1].substr(0, 4) != "qid:" || tokens[1].size() == 4) {
    throw ParseError(line_no, "missing qid");
  }
  parsed.qid = std::string(tokens[1].substr(4));
  std::size_t previous_index = 0;
  for (std::size_t t = 2; t < tokens.size(); ++t) {
    const auto colon = tokens[t].find(':');
    if (colon == std::string_view::npos) {
      throw ParseError(line_no, "feature token '" + std::string(tokens[t]) +
                                    "' is not <idx>:<val>");
    }
    std::size_t index = 0;
    const auto idx_token = tokens[t].substr(0, colon);
    const auto [ptr, ec] = std::from_chars(
        idx_token.data(), idx_token.data() + idx_token.size(), index);
    if (ec != std::errc() || ptr != idx_token.data() + idx_token.size() ||
        index == 0) {
      throw ParseError(line_no, "feature index must be a positive integer");
    }
    if (index <= previous_index) {
      throw ParseError(line_no, "feature indices must be increasing");
    }
    previous_index = index;
    parsed.values.emplace_back(
        index, parse_double(tokens[t].substr(colon + 1), line_no));
  }
  return parsed;
}

void require_ratio(double r, const char* name) {
  if (!(r >= 0.0) || r > 1.0) {
    throw ConfigError(std::string("split ratio '") + name +
                      "' must lie in [0, 1]");
  }
}

Dataset subset(const Dataset& source, std::span<const std::size_t> indices) {
  Dataset out;
  out.feature_dim = source.feature_dim;
  out.n_max = source.n_max;
  out.requests.reserve(indices.size());
  for (std::size_t idx : indices) out.requests.push_back(source.requests[idx]);
  return out;
}

double standard_normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

}  // namespace

std::vector<double> RankedRequest::relevance() const {
  return {binary_labels.begin(), binary_labels.end()};
}

void RankedRequest::validate() const {
  const std::size_t n = bids.size();
  if (static_cast<std::size_t>(features.rows()) != n ||
      graded_labels.size() != n || binary_labels.size() != n ||
      initial.size() != n) {
    throw SchemaError("request '" + id + "': per-item fields differ in length");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(bids[i] >= 0.0)) {
      throw SchemaError("request '" + id + "': negative bid");
    }
    if (graded_labels[i] < 0 || graded_labels[i] > kMaxGrade) {
      throw SchemaError("request '" + id + "': graded label out of 0..4");
    }
    if (binary_labels[i] != 0 && binary_labels[i] != 1) {
      throw SchemaError("request '" + id + "': binary label not in {0,1}");
    }
  }
  if (clicks) {
    if (clicks->size() != n) {
      throw SchemaError("request '" + id + "': clicks length mismatch");
    }
    for (int c : *clicks) {
      if (c != 0 && c != 1) {
        throw SchemaError("request '" + id + "': click not in {0,1}");
      }
    }
  }
}

std::size_t Dataset::num_items() const {
  std::size_t total = 0;
  for (const auto& r : requests) total += r.size();
  return total;
}

void Dataset::validate() const {
  for (const auto& r : requests) {
    r.validate();
    if (static_cast<std::size_t>(r.features.cols()) != feature_dim) {
      throw SchemaError("request '" + r.id + "' has feature dimension " +
                        std::to_string(r.features.cols()) + ", dataset has " +
                        std::to_string(feature_dim));
    }
    if (r.size() > n_max) {
      throw SchemaError("request '" + r.id + "' exceeds n_max");
    }
  }
}

Dataset parse_letor(std::istream& in, std::optional<std::size_t> feature_dim) {
  std::vector<std::string> qid_order;
  std::unordered_map<std::string, std::vector<ParsedLine>> groups;
  std::size_t max_index = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) {
      view = view.substr(0, hash);
    }
    view = trim(view);
    if (view.empty()) continue;
    ParsedLine parsed = parse_line(view, line_no);
    if (!parsed.values.empty()) {
      const std::size_t last = parsed.values.back().first;
      if (feature_dim && last > *feature_dim) {
        throw SchemaError("line " + std::to_string(line_no) +
                          ": feature index " + std::to_string(last) +
                          " exceeds feature dimension " +
                          std::to_string(*feature_dim));
      }
      max_index = std::max(max_index, last);
    }
    auto [it, inserted] = groups.try_emplace(parsed.qid);
    if (inserted) qid_order.push_back(parsed.qid);
    it->second.push_back(std::move(parsed));
  }

  Dataset dataset;
  dataset.feature_dim = feature_dim.value_or(max_index);
  for (const auto& qid : qid_order) {
    const auto& lines = groups.at(qid);
    RankedRequest request;
    request.id = qid;
    const auto n = static_cast<Index>(lines.size());
    request.features =
        Matrix::Zero(n, static_cast<Index>(dataset.feature_dim));
    for (Index i = 0; i < n; ++i) {
      for (const auto& [index, value] : lines[i].values) {
        request.features(i, static_cast<Index>(index) - 1) = value;
      }
      request.graded_labels.push_back(lines[i].label);
    }
    request.binary_labels.assign(lines.size(), 0);
    request.bids.assign(lines.size(), 1.0);
    request.initial = Permutation::identity(lines.size());
    dataset.n_max = std::max(dataset.n_max, lines.size());
    dataset.requests.push_back(std::move(request));
  }
  return dataset;
}

void write_letor(const Dataset& dataset, std::ostream& out) {
  const auto old_precision = out.precision();
  out << std::setprecision(17);
  for (const auto& request : dataset.requests) {
    for (std::size_t item : request.initial.display_order()) {
      out << request.graded_labels[item] << " qid:" << request.id;
      for (Index f = 0; f < request.features.cols(); ++f) {
        out << ' ' << (f + 1) << ':'
            << request.features(static_cast<Index>(item), f);
      }
      out << '\n';
    }
  }
  out.precision(old_precision);
}

Dataset binarize_labels(Dataset dataset, int threshold) {
  for (auto& request : dataset.requests) {
    for (std::size_t i = 0; i < request.size(); ++i) {
      request.binary_labels[i] = request.graded_labels[i] > threshold ? 1 : 0;
    }
  }
  return dataset;
}

Dataset truncate(const Dataset& dataset, std::size_t n_max) {
  if (n_max < 1) throw ConfigError("n_max must be at least 1");
  Dataset out;
  out.feature_dim = dataset.feature_dim;
  out.n_max = n_max;
  out.requests.reserve(dataset.requests.size());
  for (const auto& request : dataset.requests) {
    if (request.size() <= n_max) {
      out.requests.push_back(request);
      continue;
    }
    const auto order = request.initial.display_order();
    RankedRequest cut;
    cut.id = request.id;
    cut.features.resize(static_cast<Index>(n_max), request.features.cols());
    std::vector<std::size_t> kept(order.begin(),
                                  order.begin() + static_cast<long>(n_max));
    // Preserve storage order among the kept items.
    std::sort(kept.begin(), kept.end());
    std::vector<int> positions;
    std::vector<int> clicks;
    for (std::size_t row = 0; row < kept.size(); ++row) {
      const std::size_t i = kept[row];
      cut.features.row(static_cast<Index>(row)) =
          request.features.row(static_cast<Index>(i));
      cut.bids.push_back(request.bids[i]);
      cut.graded_labels.push_back(request.graded_labels[i]);
      cut.binary_labels.push_back(request.binary_labels[i]);
      positions.push_back(request.initial.position(i));
      if (request.clicks) clicks.push_back((*request.clicks)[i]);
    }
    cut.initial = Permutation(std::move(positions));
    if (request.clicks) cut.clicks = std::move(clicks);
    out.requests.push_back(std::move(cut));
  }
  return out;
}

Splits truncate_and_split(const Dataset& dataset, std::size_t n_max,
                          const SplitRatios& ratios, std::uint64_t seed) {
  require_ratio(ratios.train, "train");
  require_ratio(ratios.validation, "validation");
  require_ratio(ratios.test, "test");
  if (std::abs(ratios.train + ratios.validation + ratios.test - 1.0) > 1e-9) {
    throw ConfigError("split ratios must sum to 1");
  }
  const Dataset truncated = truncate(dataset, n_max);
  const std::size_t total = truncated.requests.size();
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(order);

  const auto n_train =
      static_cast<std::size_t>(std::llround(ratios.train * total));
  const auto n_val = std::min(
      total - std::min(total, n_train),
      static_cast<std::size_t>(std::llround(ratios.validation * total)));
  // Test takes the remainder, unless its ratio is exactly zero.
  std::size_t n_test = total - std::min(total, n_train) - n_val;
  if (ratios.test == 0.0) n_test = 0;
  const std::size_t n_train_final = total - n_val - n_test;

  auto take = [&](std::size_t begin, std::size_t count) {
    std::vector<std::size_t> idx(order.begin() + static_cast<long>(begin),
                                 order.begin() +
                                     static_cast<long>(begin + count));
    std::sort(idx.begin(), idx.end());
    return subset(truncated, idx);
  };
  return Splits{take(0, n_train_final), take(n_train_final, n_val),
                take(n_train_final + n_val, n_test)};
}

SyntheticModel::SyntheticModel(std::size_t feature_dim) {
  Rng rng(derive_seed(0x5eed, feature_dim));
  weights_.resize(static_cast<Index>(feature_dim));
  for (Index f = 0; f < weights_.size(); ++f) weights_(f) = rng.normal();
  // Moments of w.x for x uniform on the unit cube.
  mean_ = 0.5 * weights_.sum();
  stddev_ = std::sqrt(weights_.squaredNorm() / 12.0);
  if (stddev_ == 0.0) stddev_ = 1.0;
}

double SyntheticModel::hidden_score(const RowVector& features) const {
  return (features.dot(weights_.transpose()) - mean_) / stddev_;
}

double SyntheticModel::label_probability(const RowVector& features,
                                         int min_grade) const {
  if (min_grade <= 0) return 1.0;
  if (min_grade > kMaxGrade) return 0.0;
  // round(v) >= g  <=>  v >= g - 0.5
  const double mean = kSlope * hidden_score(features) + kOffset;
  return 1.0 - standard_normal_cdf((min_grade - 0.5 - mean) / kNoise);
}

Dataset generate_synthetic(std::size_t n_requests, std::size_t n_items,
                           std::size_t feature_dim, std::uint64_t seed) {
  const SyntheticModel model(feature_dim);
  Rng rng(derive_seed(seed, "synthetic"));
  Dataset dataset;
  dataset.feature_dim = feature_dim;
  dataset.n_max = n_items;
  dataset.requests.reserve(n_requests);
  for (std::size_t r = 0; r < n_requests; ++r) {
    RankedRequest request;
    request.id = "syn-" + std::to_string(r);
    request.features.resize(static_cast<Index>(n_items),
                            static_cast<Index>(feature_dim));
    for (Index i = 0; i < request.features.rows(); ++i) {
      for (Index f = 0; f < request.features.cols(); ++f) {
        request.features(i, f) = rng.uniform();
      }
    }
    for (Index i = 0; i < request.features.rows(); ++i) {
      const double latent =
          SyntheticModel::kSlope * model.hidden_score(request.features.row(i)) +
          SyntheticModel::kOffset + SyntheticModel::kNoise * rng.normal();
      const double grade = std::clamp(std::round(latent), 0.0,
                                      static_cast<double>(kMaxGrade));
      request.graded_labels.push_back(static_cast<int>(grade));
      request.bids.push_back(rng.uniform(0.5, 1.5));
    }
    request.binary_labels.assign(n_items, 0);
    request.initial = Permutation::identity(n_items);
    dataset.requests.push_back(std::move(request));
  }
  return binarize_labels(std::move(dataset), 1);
}

nlohmann::json to_json(const Dataset& dataset) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : dataset.requests) {
    nlohmann::json features = nlohmann::json::array();
    for (Index i = 0; i < r.features.rows(); ++i) {
      std::vector<double> row(r.features.cols());
      for (Index f = 0; f < r.features.cols(); ++f) row[f] = r.features(i, f);
      features.push_back(std::move(row));
    }
    nlohmann::json record = {
        {"id", r.id},
        {"features", std::move(features)},
        {"bids", r.bids},
        {"graded_labels", r.graded_labels},
        {"binary_labels", r.binary_labels},
        {"initial_positions", r.initial.positions()},
    };
    if (r.clicks) record["clicks"] = *r.clicks;
    records.push_back(std::move(record));
  }
  return {
      {"manifest",
       {{"format", kArchiveFormat},
        {"version", kArchiveVersion},
        {"feature_dim", dataset.feature_dim},
        {"n_max", dataset.n_max},
        {"num_requests", dataset.requests.size()}}},
      {"requests", std::move(records)},
  };
}

Dataset dataset_from_json(const nlohmann::json& archive) {
  try {
    const auto& manifest = archive.at("manifest");
    if (manifest.at("format").get<std::string>() != kArchiveFormat ||
        manifest.at("version").get<int>() != kArchiveVersion) {
      throw SchemaError("not a crum dataset archive (version 1)");
    }
    Dataset dataset;
    dataset.feature_dim = manifest.at("feature_dim").get<std::size_t>();
    dataset.n_max = manifest.at("n_max").get<std::size_t>();
    for (const auto& record : archive.at("requests")) {
      RankedRequest r;
      r.id = record.at("id").get<std::string>();
      const auto& rows = record.at("features");
      r.features.resize(static_cast<Index>(rows.size()),
                        static_cast<Index>(dataset.feature_dim));
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto row = rows[i].get<std::vector<double>>();
        if (row.size() != dataset.feature_dim) {
          throw SchemaError("request '" + r.id + "' row has wrong dimension");
        }
        for (std::size_t f = 0; f < row.size(); ++f) {
          r.features(static_cast<Index>(i), static_cast<Index>(f)) = row[f];
        }
      }
      r.bids = record.at("bids").get<std::vector<double>>();
      r.graded_labels = record.at("graded_labels").get<std::vector<int>>();
      r.binary_labels = record.at("binary_labels").get<std::vector<int>>();
      r.initial =
          Permutation(record.at("initial_positions").get<std::vector<int>>());
      if (record.contains("clicks")) {
        r.clicks = record.at("clicks").get<std::vector<int>>();
      }
      dataset.requests.push_back(std::move(r));
    }
    if (dataset.requests.size() !=
        manifest.at("num_requests").get<std::size_t>()) {
      throw SchemaError("manifest request count disagrees with records");
    }
    dataset.validate();
    return dataset;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed dataset archive: ") + e.what());
  }
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json(dataset).dump() << '\n';
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  nlohmann::json archive;
  try {
    archive = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  return dataset_from_json(archive);
}

}  // namespace crum::data
