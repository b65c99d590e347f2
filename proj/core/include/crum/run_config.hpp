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

#ifndef CRUM_RUN_CONFIG_HPP_
#define CRUM_RUN_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "crum/click_model.hpp"
#include "crum/dataset.hpp"
#include "crum/evaluator.hpp"
#include "crum/initial_rankers.hpp"
#include "crum/reranker.hpp"

namespace crum::pipeline {

struct DatasetSpec {
  std::string source = "synthetic";  // "synthetic" or "letor"
  std::filesystem::path path;        // LETOR file when source == "letor"
  std::size_t n_requests = 3000;
  std::size_t n_items = 10;
  std::size_t feature_dim = 20;
  std::size_t n_max = 10;
  data::SplitRatios split;
};

struct AblationFlags {
  bool disable_bilstm = false;             // CRUM(-BL)
  bool disable_gat = false;                // CRUM(-GAT): no graph anywhere
  bool disable_graph_in_reranker = false;  // CRUM(-GE)
};

struct OracleSpec {
  std::size_t requests = 100;
  std::size_t list_size = 5;
  std::size_t n_cap = 7;
};

// Every knob of a run. Defaults follow the published hyperparameters where
// they exist (eta 0.7, T_b 1, ten positions, GAT 2 x 64, Bi-LSTM 64, MLP
// [1024, 512, 128, 64], learning rates 3e-4 / 1e-5, batch 128, ten pairs).
struct RunConfig {
  DatasetSpec dataset;
  clicks::ClickModelConfig click_model;
  rankers::RankerKind initial_ranker = rankers::RankerKind::kPointwise;
  rankers::PointwiseConfig pointwise;
  gat::GatConfig gat;
  evaluator::EvaluatorConfig evaluator;
  evaluator::TrainConfig evaluator_training;
  double propensity_floor = 1e-3;
  reranker::RerankerConfig reranker;
  reranker::RerankerTrainConfig reranker_training;
  AblationFlags ablation;
  OracleSpec oracle;
  std::uint64_t seed = 42;

  // Architecture objects with the ablation flags applied.
  evaluator::EvaluatorConfig evaluator_config() const;
  reranker::RerankerConfig reranker_config() const;
  // "crum", "crum(-BL)", "crum(-GAT)", "crum(-GE)" or a combination.
  std::string variant_name() const;
};

// Reads a JSON document; absent keys keep their defaults and unknown keys
// are a ConfigError.
RunConfig config_from_json(const nlohmann::json& json);
nlohmann::json to_json(const RunConfig& config);
RunConfig load_config(const std::filesystem::path& path);

enum class Stage {
  kPrepare,
  kTrainInitial,
  kSimulateClicks,
  kTrainEvaluator,
  kTrainReranker,
  kEvaluate,
  kOracleCheck,
};

inline constexpr Stage kAllStages[] = {
    Stage::kPrepare,        Stage::kTrainInitial,  Stage::kSimulateClicks,
    Stage::kTrainEvaluator, Stage::kTrainReranker, Stage::kEvaluate,
    Stage::kOracleCheck};

std::string_view stage_name(Stage stage);
Stage parse_stage(std::string_view name);
// Stages whose outputs `stage` reads.
std::vector<Stage> upstream(Stage stage);

// Hex digest of the config sections that influence `stage` and everything
// upstream of it.
std::string stage_hash(const RunConfig& config, Stage stage);

}  // namespace crum::pipeline

#endif  // CRUM_RUN_CONFIG_HPP_
