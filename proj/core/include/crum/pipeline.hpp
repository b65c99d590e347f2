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

#ifndef CRUM_PIPELINE_HPP_
#define CRUM_PIPELINE_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "crum/dataset.hpp"
#include "crum/permutation.hpp"
#include "crum/run_config.hpp"

namespace crum::pipeline {

// Staged experiment driver over one output directory:
//
//   data/         prepared splits, then the same splits ranked initially
//   clicks/       click logs under the initial rankings
//   checkpoints/  ranker.bin, evaluator.bin (graph + evaluator), reranker.bin
//   logs/         training curves
//   reports/      metrics.json, table.csv/json, permutations.json, oracle.json
//   manifests/    <stage>.json with config hash, seeds and artifact list
//
// A stage refuses to run (DependencyError) until the manifests of its
// upstream stages exist, and refuses stale inputs (ConfigError) when their
// recorded config hash differs from the current config.
class Pipeline {
 public:
  Pipeline(RunConfig config, std::filesystem::path out_dir,
           bool allow_config_mismatch = false);

  const RunConfig& config() const { return config_; }
  const std::filesystem::path& out_dir() const { return out_dir_; }

  // Runs one stage and returns the artifacts it wrote.
  std::vector<std::filesystem::path> run(Stage stage);
  void run_all();

  // Ranked split with its click log attached (after simulate-clicks).
  data::Dataset load_split(const std::string& split) const;

  // Reranks every request of `dataset` (whose initial permutations must be
  // set) with the trained models.
  std::vector<Permutation> rerank(const data::Dataset& dataset) const;

  std::filesystem::path manifest_path(Stage stage) const;

 private:
  std::vector<std::filesystem::path> prepare();
  std::vector<std::filesystem::path> train_initial();
  std::vector<std::filesystem::path> simulate_clicks();
  std::vector<std::filesystem::path> train_evaluator();
  std::vector<std::filesystem::path> train_reranker();
  std::vector<std::filesystem::path> evaluate();
  std::vector<std::filesystem::path> oracle_check();

  void require_upstream(Stage stage) const;
  void write_manifest(Stage stage, const std::vector<std::filesystem::path>& artifacts,
                      const nlohmann::json& extra) const;
  std::filesystem::path path(const std::string& relative) const;

  RunConfig config_;
  std::filesystem::path out_dir_;
  bool allow_config_mismatch_;
};

// Permutation archive: {"format":"crum-permutations","version":1,
// "permutations":[{"request_id","positions"}]}.
void save_permutations(const data::Dataset& dataset,
                       const std::vector<Permutation>& permutations,
                       const std::filesystem::path& path);

}  // namespace crum::pipeline

#endif  // CRUM_PIPELINE_HPP_
