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

#include "crum/run_config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "crum/error.hpp"

namespace crum::pipeline {

using nlohmann::json;

evaluator::EvaluatorConfig RunConfig::evaluator_config() const {
  evaluator::EvaluatorConfig out = evaluator;
  out.feature_dim = static_cast<Index>(dataset.feature_dim);
  out.n_max = static_cast<Index>(dataset.n_max);
  out.gat = gat;
  out.use_bilstm = !ablation.disable_bilstm;
  out.use_graph = !ablation.disable_gat;
  return out;
}

reranker::RerankerConfig RunConfig::reranker_config() const {
  reranker::RerankerConfig out = reranker;
  out.feature_dim = static_cast<Index>(dataset.feature_dim);
  out.n_max = static_cast<Index>(dataset.n_max);
  out.use_graph =
      !ablation.disable_gat && !ablation.disable_graph_in_reranker;
  return out;
}

std::string RunConfig::variant_name() const {
  std::string name = "crum";
  if (ablation.disable_bilstm) name += "(-BL)";
  if (ablation.disable_gat) name += "(-GAT)";
  else if (ablation.disable_graph_in_reranker) name += "(-GE)";
  return name;
}

namespace {

// Reads one object, remembering which keys were used so that typos surface
// as errors instead of silently falling back to defaults.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_ + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& value) {
    seen_.insert(key);
    if (!node_.contains(key)) return;
    try {
      value = node_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(path_ + "." + key + ": " + e.what());
    }
  }

  bool has(const char* key) const { return node_.contains(key); }

  Section child(const char* key) {
    seen_.insert(key);
    return Section(node_.contains(key) ? node_.at(key) : empty_, path_ + "." + key);
  }

  void finish() const {
    for (const auto& [key, _] : node_.items()) {
      if (!seen_.contains(key)) {
        throw ConfigError("unknown config key " + path_ + "." + key);
      }
    }
  }

 private:
  inline static const json empty_ = json::object();
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename T>
void positive(const T& value, const char* what) {
  if (!(value > T{})) throw ConfigError(std::string(what) + " must be positive");
}

}  // namespace

RunConfig config_from_json(const json& root) {
  RunConfig c;
  Section top(root, "config");
  top.get("seed", c.seed);

  {
    Section s = top.child("dataset");
    s.get("source", c.dataset.source);
    std::string path = c.dataset.path.string();
    s.get("path", path);
    c.dataset.path = path;
    s.get("n_requests", c.dataset.n_requests);
    s.get("n_items", c.dataset.n_items);
    s.get("feature_dim", c.dataset.feature_dim);
    s.get("n_max", c.dataset.n_max);
    Section split = s.child("split");
    split.get("train", c.dataset.split.train);
    split.get("validation", c.dataset.split.validation);
    split.get("test", c.dataset.split.test);
    split.finish();
    s.finish();
    if (c.dataset.source != "synthetic" && c.dataset.source != "letor") {
      throw ConfigError("dataset.source must be 'synthetic' or 'letor'");
    }
    positive(c.dataset.n_max, "dataset.n_max");
    positive(c.dataset.feature_dim, "dataset.feature_dim");
  }
  {
    Section s = top.child("click_model");
    s.get("eta", c.click_model.eta);
    s.get("threshold", c.click_model.threshold);
    s.finish();
    if (c.click_model.eta < 0.0) throw ConfigError("click_model.eta must be >= 0");
  }
  {
    Section s = top.child("initial_ranker");
    std::string kind(rankers::ranker_kind_name(c.initial_ranker));
    s.get("kind", kind);
    c.initial_ranker = rankers::parse_ranker_kind(kind);
    s.get("hidden", c.pointwise.hidden);
    std::string act(nn::activation_name(c.pointwise.activation));
    s.get("activation", act);
    c.pointwise.activation = nn::parse_activation(act);
    s.get("learning_rate", c.pointwise.learning_rate);
    s.get("batch_size", c.pointwise.batch_size);
    s.get("epochs", c.pointwise.epochs);
    s.get("patience", c.pointwise.patience);
    s.finish();
  }
  {
    Section s = top.child("gat");
    s.get("layers", c.gat.layers);
    s.get("heads", c.gat.heads);
    s.get("width", c.gat.width);
    s.get("leaky_slope", c.gat.leaky_slope);
    s.finish();
  }
  {
    Section s = top.child("evaluator");
    s.get("lstm_hidden", c.evaluator.lstm_hidden);
    s.get("mlp_hidden", c.evaluator.mlp_hidden);
    std::string act(nn::activation_name(c.evaluator.activation));
    s.get("activation", act);
    c.evaluator.activation = nn::parse_activation(act);
    s.get("learning_rate", c.evaluator_training.learning_rate);
    s.get("batch_size", c.evaluator_training.batch_size);
    s.get("epochs", c.evaluator_training.epochs);
    s.get("patience", c.evaluator_training.patience);
    s.get("propensity_floor", c.propensity_floor);
    s.finish();
    positive(c.propensity_floor, "evaluator.propensity_floor");
  }
  {
    Section s = top.child("reranker");
    s.get("mlp_hidden", c.reranker.mlp_hidden);
    std::string act(nn::activation_name(c.reranker.activation));
    s.get("activation", act);
    c.reranker.activation = nn::parse_activation(act);
    s.get("sigma", c.reranker.sigma);
    s.get("learning_rate", c.reranker_training.learning_rate);
    s.get("batch_size", c.reranker_training.batch_size);
    s.get("epochs", c.reranker_training.epochs);
    s.get("patience", c.reranker_training.patience);
    s.get("pairs_per_list", c.reranker_training.pairs_per_list);
    s.get("resample_pairs", c.reranker_training.resample_pairs);
    std::string utility(reranker::utility_mode_name(c.reranker_training.utility));
    s.get("utility", utility);
    c.reranker_training.utility = reranker::parse_utility_mode(utility);
    s.finish();
    positive(c.reranker.sigma, "reranker.sigma");
  }
  {
    Section s = top.child("ablation");
    s.get("disable_bilstm", c.ablation.disable_bilstm);
    s.get("disable_gat", c.ablation.disable_gat);
    s.get("disable_graph_in_reranker", c.ablation.disable_graph_in_reranker);
    s.finish();
  }
  {
    Section s = top.child("oracle");
    s.get("requests", c.oracle.requests);
    s.get("list_size", c.oracle.list_size);
    s.get("n_cap", c.oracle.n_cap);
    s.finish();
  }
  top.finish();
  c.reranker_training.propensity_floor = c.propensity_floor;
  return c;
}

json to_json(const RunConfig& c) {
  return {
      {"seed", c.seed},
      {"dataset",
       {{"source", c.dataset.source},
        {"path", c.dataset.path.string()},
        {"n_requests", c.dataset.n_requests},
        {"n_items", c.dataset.n_items},
        {"feature_dim", c.dataset.feature_dim},
        {"n_max", c.dataset.n_max},
        {"split",
         {{"train", c.dataset.split.train},
          {"validation", c.dataset.split.validation},
          {"test", c.dataset.split.test}}}}},
      {"click_model",
       {{"eta", c.click_model.eta}, {"threshold", c.click_model.threshold}}},
      {"initial_ranker",
       {{"kind", rankers::ranker_kind_name(c.initial_ranker)},
        {"hidden", c.pointwise.hidden},
        {"activation", nn::activation_name(c.pointwise.activation)},
        {"learning_rate", c.pointwise.learning_rate},
        {"batch_size", c.pointwise.batch_size},
        {"epochs", c.pointwise.epochs},
        {"patience", c.pointwise.patience}}},
      {"gat",
       {{"layers", c.gat.layers},
        {"heads", c.gat.heads},
        {"width", c.gat.width},
        {"leaky_slope", c.gat.leaky_slope}}},
      {"evaluator",
       {{"lstm_hidden", c.evaluator.lstm_hidden},
        {"mlp_hidden", c.evaluator.mlp_hidden},
        {"activation", nn::activation_name(c.evaluator.activation)},
        {"learning_rate", c.evaluator_training.learning_rate},
        {"batch_size", c.evaluator_training.batch_size},
        {"epochs", c.evaluator_training.epochs},
        {"patience", c.evaluator_training.patience},
        {"propensity_floor", c.propensity_floor}}},
      {"reranker",
       {{"mlp_hidden", c.reranker.mlp_hidden},
        {"activation", nn::activation_name(c.reranker.activation)},
        {"sigma", c.reranker.sigma},
        {"learning_rate", c.reranker_training.learning_rate},
        {"batch_size", c.reranker_training.batch_size},
        {"epochs", c.reranker_training.epochs},
        {"patience", c.reranker_training.patience},
        {"pairs_per_list", c.reranker_training.pairs_per_list},
        {"resample_pairs", c.reranker_training.resample_pairs},
        {"utility", reranker::utility_mode_name(c.reranker_training.utility)}}},
      {"ablation",
       {{"disable_bilstm", c.ablation.disable_bilstm},
        {"disable_gat", c.ablation.disable_gat},
        {"disable_graph_in_reranker", c.ablation.disable_graph_in_reranker}}},
      {"oracle",
       {{"requests", c.oracle.requests},
        {"list_size", c.oracle.list_size},
        {"n_cap", c.oracle.n_cap}}},
  };
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return config_from_json(root);
}

std::string_view stage_name(Stage stage) {
  switch (stage) {
    case Stage::kPrepare: return "prepare";
    case Stage::kTrainInitial: return "train-initial";
    case Stage::kSimulateClicks: return "simulate-clicks";
    case Stage::kTrainEvaluator: return "train-evaluator";
    case Stage::kTrainReranker: return "train-reranker";
    case Stage::kEvaluate: return "evaluate";
    case Stage::kOracleCheck: return "oracle-check";
  }
  return "prepare";
}

Stage parse_stage(std::string_view name) {
  for (Stage s : kAllStages) {
    if (stage_name(s) == name) return s;
  }
  throw ConfigError("unknown stage '" + std::string(name) + "'");
}

std::vector<Stage> upstream(Stage stage) {
  switch (stage) {
    case Stage::kPrepare: return {};
    case Stage::kTrainInitial: return {Stage::kPrepare};
    case Stage::kSimulateClicks: return {Stage::kTrainInitial};
    case Stage::kTrainEvaluator: return {Stage::kSimulateClicks};
    case Stage::kTrainReranker: return {Stage::kTrainEvaluator};
    case Stage::kEvaluate: return {Stage::kTrainReranker};
    case Stage::kOracleCheck: return {Stage::kTrainReranker};
  }
  return {};
}

std::string stage_hash(const RunConfig& config, Stage stage) {
  const json all = to_json(config);
  // Labels are binarised with the click threshold while preparing data, so
  // the click model belongs to every stage.
  json relevant = {{"seed", all["seed"]},
                   {"dataset", all["dataset"]},
                   {"click_model", all["click_model"]}};
  const auto at_least = [stage](Stage s) {
    return static_cast<int>(stage) >= static_cast<int>(s);
  };
  if (at_least(Stage::kTrainInitial)) {
    relevant["initial_ranker"] = all["initial_ranker"];
  }
  if (at_least(Stage::kTrainEvaluator)) {
    relevant["gat"] = all["gat"];
    relevant["evaluator"] = all["evaluator"];
    relevant["ablation_evaluator"] = {
        all["ablation"]["disable_bilstm"], all["ablation"]["disable_gat"]};
  }
  if (at_least(Stage::kTrainReranker)) {
    relevant["reranker"] = all["reranker"];
    relevant["ablation"] = all["ablation"];
  }
  if (stage == Stage::kOracleCheck) relevant["oracle"] = all["oracle"];
  // FNV-1a over the canonical dump (nlohmann sorts object keys).
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : relevant.dump()) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace crum::pipeline
