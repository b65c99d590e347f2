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

#include "crum/pipeline.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

#include <nlohmann/json.hpp>

#include "crum/click_model.hpp"
#include "crum/error.hpp"
#include "crum/evaluator.hpp"
#include "crum/initial_rankers.hpp"
#include "crum/metrics.hpp"
#include "crum/oracle.hpp"
#include "crum/parameter_store.hpp"
#include "crum/random.hpp"
#include "crum/report.hpp"
#include "crum/reranker.hpp"

namespace crum::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* const kSplits[] = {"train", "validation", "test"};

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_json(const fs::path& path, const json& doc) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  return json::parse(in);
}

std::uint64_t stage_seed(const RunConfig& config, Stage stage) {
  return derive_seed(config.seed, stage_name(stage));
}

void stamp(ParameterStore& params, const RunConfig& config, Stage stage) {
  params.metadata["stage"] = std::string(stage_name(stage));
  params.metadata["config_hash"] = stage_hash(config, stage);
  params.metadata["seed"] = std::to_string(config.seed);
  params.metadata["stage_seed"] = std::to_string(stage_seed(config, stage));
  params.metadata["timestamp"] = timestamp();
}

template <typename T>
json curve(const std::vector<T>& values) {
  json out = json::array();
  for (const auto& v : values) out.push_back(v);
  return out;
}

}  // namespace

void save_permutations(const data::Dataset& dataset,
                       const std::vector<Permutation>& permutations,
                       const fs::path& path) {
  if (permutations.size() != dataset.requests.size()) {
    throw DomainError("one permutation per request is required");
  }
  json list = json::array();
  for (std::size_t r = 0; r < permutations.size(); ++r) {
    list.push_back({{"request_id", dataset.requests[r].id},
                    {"positions", permutations[r].positions()}});
  }
  write_json(path, {{"format", "crum-permutations"},
                    {"version", 1},
                    {"permutations", list}});
}

Pipeline::Pipeline(RunConfig config, fs::path out_dir, bool allow_config_mismatch)
    : config_(std::move(config)),
      out_dir_(std::move(out_dir)),
      allow_config_mismatch_(allow_config_mismatch) {}

fs::path Pipeline::path(const std::string& relative) const {
  return out_dir_ / relative;
}

fs::path Pipeline::manifest_path(Stage stage) const {
  return path("manifests/" + std::string(stage_name(stage)) + ".json");
}

void Pipeline::require_upstream(Stage stage) const {
  for (Stage up : upstream(stage)) {
    const auto manifest = manifest_path(up);
    if (!fs::exists(manifest)) {
      throw DependencyError("stage '" + std::string(stage_name(stage)) +
                            "' needs stage '" + std::string(stage_name(up)) +
                            "' to run first (missing " + manifest.string() + ")");
    }
    const json doc = read_json(manifest);
    const std::string recorded = doc.at("config_hash").get<std::string>();
    if (recorded != stage_hash(config_, up) && !allow_config_mismatch_) {
      throw ConfigError("outputs of stage '" + std::string(stage_name(up)) +
                        "' were produced with a different config (hash " +
                        recorded + "); re-run it or allow the mismatch");
    }
  }
}

void Pipeline::write_manifest(Stage stage, const std::vector<fs::path>& artifacts,
                              const json& extra) const {
  json list = json::array();
  for (const auto& a : artifacts) list.push_back(fs::relative(a, out_dir_).string());
  json doc = {{"stage", stage_name(stage)},
              {"config_hash", stage_hash(config_, stage)},
              {"seed", config_.seed},
              {"stage_seed", stage_seed(config_, stage)},
              {"timestamp", timestamp()},
              {"artifacts", list},
              {"details", extra}};
  write_json(manifest_path(stage), doc);
  write_json(path("config.json"), to_json(config_));
}

std::vector<fs::path> Pipeline::run(Stage stage) {
  require_upstream(stage);
  fs::create_directories(out_dir_);
  switch (stage) {
    case Stage::kPrepare: return prepare();
    case Stage::kTrainInitial: return train_initial();
    case Stage::kSimulateClicks: return simulate_clicks();
    case Stage::kTrainEvaluator: return train_evaluator();
    case Stage::kTrainReranker: return train_reranker();
    case Stage::kEvaluate: return evaluate();
    case Stage::kOracleCheck: return oracle_check();
  }
  return {};
}

void Pipeline::run_all() {
  for (Stage stage : kAllStages) run(stage);
}

std::vector<fs::path> Pipeline::prepare() {
  const auto& spec = config_.dataset;
  data::Dataset all;
  if (spec.source == "synthetic") {
    all = data::generate_synthetic(spec.n_requests, spec.n_items, spec.feature_dim,
                                   derive_seed(config_.seed, "data"));
  } else {
    std::ifstream in(spec.path);
    if (!in) throw IoError("cannot open LETOR file " + spec.path.string());
    all = data::parse_letor(in, spec.feature_dim);
  }
  all = data::binarize_labels(std::move(all), config_.click_model.threshold);
  const auto splits = data::truncate_and_split(all, spec.n_max, spec.split,
                                               stage_seed(config_, Stage::kPrepare));
  std::vector<fs::path> written;
  const data::Dataset* parts[] = {&splits.train, &splits.validation, &splits.test};
  json sizes;
  for (int s = 0; s < 3; ++s) {
    const auto p = path(std::string("data/") + kSplits[s] + ".json");
    fs::create_directories(p.parent_path());
    data::save_dataset(*parts[s], p);
    written.push_back(p);
    sizes[kSplits[s]] = parts[s]->requests.size();
  }
  write_manifest(Stage::kPrepare, written, {{"requests", sizes}});
  return written;
}

std::vector<fs::path> Pipeline::train_initial() {
  const auto train = data::load_dataset(path("data/train.json"));
  const auto validation = data::load_dataset(path("data/validation.json"));
  const rankers::PointwiseRanker ranker(static_cast<Index>(config_.dataset.feature_dim),
                                        config_.pointwise);
  rankers::PointwiseHistory history;
  ParameterStore params =
      rankers::train_pointwise(ranker, train, validation, config_.pointwise,
                               stage_seed(config_, Stage::kTrainInitial), &history);
  stamp(params, config_, Stage::kTrainInitial);
  params.metadata["ranker_kind"] =
      std::string(rankers::ranker_kind_name(config_.initial_ranker));
  std::vector<fs::path> written;
  const auto checkpoint = path("checkpoints/ranker.bin");
  fs::create_directories(checkpoint.parent_path());
  params.save(checkpoint);
  written.push_back(checkpoint);

  const auto rank_seed = derive_seed(config_.seed, "initial-ranking");
  for (const char* split : kSplits) {
    const auto source = data::load_dataset(path(std::string("data/") + split + ".json"));
    const auto ranked =
        rankers::apply_ranker(source, config_.initial_ranker, ranker, params, rank_seed);
    const auto p = path(std::string("data/ranked_") + split + ".json");
    data::save_dataset(ranked, p);
    written.push_back(p);
  }
  const auto log = path("logs/initial_ranker.json");
  write_json(log, {{"train_loss", curve(history.train_loss)},
                   {"validation_loss", curve(history.validation_loss)},
                   {"best_epoch", history.best_epoch}});
  written.push_back(log);
  write_manifest(Stage::kTrainInitial, written,
                 {{"kind", rankers::ranker_kind_name(config_.initial_ranker)},
                  {"epochs", config_.pointwise.epochs},
                  {"patience", config_.pointwise.patience},
                  {"best_epoch", history.best_epoch}});
  return written;
}

std::vector<fs::path> Pipeline::simulate_clicks() {
  std::vector<fs::path> written;
  json rates;
  for (const char* split : kSplits) {
    auto ranked = data::load_dataset(path(std::string("data/ranked_") + split + ".json"));
    const auto logs = clicks::simulate_dataset(
        ranked, config_.click_model, derive_seed(config_.seed, std::string("clicks/") + split));
    const auto p = path(std::string("clicks/") + split + ".json");
    fs::create_directories(p.parent_path());
    clicks::save_click_logs(logs, p);
    written.push_back(p);
    double clicked = 0.0;
    for (const auto& log : logs) {
      for (int c : log.clicks) clicked += c;
    }
    rates[split] = ranked.num_items() == 0 ? 0.0 : clicked / static_cast<double>(ranked.num_items());
  }
  write_manifest(Stage::kSimulateClicks, written, {{"click_rate", rates}});
  return written;
}

data::Dataset Pipeline::load_split(const std::string& split) const {
  auto ranked = data::load_dataset(path("data/ranked_" + split + ".json"));
  const auto logs = clicks::load_click_logs(path("clicks/" + split + ".json"));
  clicks::attach_click_logs(ranked, logs);
  return ranked;
}

std::vector<fs::path> Pipeline::train_evaluator() {
  const auto train = load_split("train");
  const auto validation = load_split("validation");
  const evaluator::Evaluator model(config_.evaluator_config());
  evaluator::TrainingHistory history;
  ParameterStore params = evaluator::train_evaluator(
      model, train, validation, config_.evaluator_training,
      stage_seed(config_, Stage::kTrainEvaluator), &history);
  stamp(params, config_, Stage::kTrainEvaluator);
  const auto checkpoint = path("checkpoints/evaluator.bin");
  fs::create_directories(checkpoint.parent_path());
  params.save(checkpoint);
  const auto log = path("logs/evaluator.json");
  write_json(log, {{"train_loss", curve(history.train_loss)},
                   {"validation_loss", curve(history.validation_loss)},
                   {"best_epoch", history.best_epoch}});
  write_manifest(Stage::kTrainEvaluator, {checkpoint, log},
                 {{"epochs", config_.evaluator_training.epochs},
                  {"patience", config_.evaluator_training.patience},
                  {"best_epoch", history.best_epoch},
                  {"use_bilstm", model.config().use_bilstm},
                  {"use_graph", model.config().use_graph}});
  return {checkpoint, log};
}

namespace {

ParameterStore load_stage_params(const fs::path& file, const RunConfig& config,
                                 Stage stage, bool allow_mismatch) {
  if (!fs::exists(file)) {
    throw DependencyError("missing checkpoint " + file.string() + " from stage '" +
                          std::string(stage_name(stage)) + "'");
  }
  return ParameterStore::load_checked(file, stage_hash(config, stage), allow_mismatch);
}

}  // namespace

std::vector<fs::path> Pipeline::train_reranker() {
  const auto train = load_split("train");
  const auto validation = load_split("validation");
  const evaluator::Evaluator model(config_.evaluator_config());
  const ParameterStore frozen =
      load_stage_params(path("checkpoints/evaluator.bin"), config_,
                        Stage::kTrainEvaluator, allow_config_mismatch_);
  const reranker::Reranker scorer(config_.reranker_config(), model.graph_width());
  reranker::RerankerHistory history;
  ParameterStore params = reranker::train_reranker(
      scorer, model, frozen, train, validation, config_.reranker_training,
      stage_seed(config_, Stage::kTrainReranker), &history);
  stamp(params, config_, Stage::kTrainReranker);
  const auto checkpoint = path("checkpoints/reranker.bin");
  params.save(checkpoint);
  const auto log = path("logs/reranker.json");
  write_json(log, {{"train_loss", curve(history.train_loss)},
                   {"validation_utility", curve(history.validation_utility)},
                   {"best_epoch", history.best_epoch},
                   {"delta_evaluations", history.delta_evaluations},
                   {"propensity_evaluated", history.propensity.evaluated},
                   {"propensity_clamped", history.propensity.clamped}});
  write_manifest(Stage::kTrainReranker, {checkpoint, log},
                 {{"epochs", config_.reranker_training.epochs},
                  {"patience", config_.reranker_training.patience},
                  {"best_epoch", history.best_epoch},
                  {"propensity_clamped", history.propensity.clamped}});
  return {checkpoint, log};
}

std::vector<Permutation> Pipeline::rerank(const data::Dataset& dataset) const {
  require_upstream(Stage::kEvaluate);
  const evaluator::Evaluator model(config_.evaluator_config());
  const ParameterStore frozen =
      load_stage_params(path("checkpoints/evaluator.bin"), config_,
                        Stage::kTrainEvaluator, allow_config_mismatch_);
  const ParameterStore params =
      load_stage_params(path("checkpoints/reranker.bin"), config_,
                        Stage::kTrainReranker, allow_config_mismatch_);
  const reranker::Reranker scorer(config_.reranker_config(), model.graph_width());
  std::vector<Permutation> out;
  out.reserve(dataset.requests.size());
  for (const auto& request : dataset.requests) {
    out.push_back(reranker::rerank(scorer, params, request,
                                   model.graph_embedding(frozen, request)));
  }
  return out;
}

std::vector<fs::path> Pipeline::evaluate() {
  const auto test = load_split("test");
  const evaluator::Evaluator model(config_.evaluator_config());
  const ParameterStore frozen =
      load_stage_params(path("checkpoints/evaluator.bin"), config_,
                        Stage::kTrainEvaluator, allow_config_mismatch_);
  const ParameterStore params =
      load_stage_params(path("checkpoints/reranker.bin"), config_,
                        Stage::kTrainReranker, allow_config_mismatch_);
  const reranker::Reranker scorer(config_.reranker_config(), model.graph_width());
  const auto mode = config_.reranker_training.utility;

  std::vector<Matrix> graphs;
  std::vector<Permutation> initial, greedy, crum;
  evaluator::PropensityDiagnostics propensity;
  double unbiased = 0.0;
  for (const auto& request : test.requests) {
    graphs.push_back(model.graph_embedding(frozen, request));
    const auto weights = reranker::utility_weights(request, mode);
    initial.push_back(request.initial);
    greedy.push_back(reranker::greedy_rerank(model, frozen, request, graphs.back(), weights));
    crum.push_back(reranker::rerank(scorer, params, request, graphs.back()));
    const evaluator::UtilityEstimator estimator(model, frozen, request, weights,
                                                config_.propensity_floor);
    unbiased += estimator.unbiased_utility(crum.back(), &propensity);
  }

  const std::string kind(rankers::ranker_kind_name(config_.initial_ranker));
  const std::string run = out_dir_.filename().string();
  auto make_row = [&](const std::string& role, const std::vector<Permutation>& perms) {
    ReportRow row;
    row.run = run;
    row.role = role;
    row.variant = config_.variant_name();
    row.initial_ranker = kind;
    row.pairs_per_list = config_.reranker_training.pairs_per_list;
    row.metrics = metrics::evaluate(role, test, perms, config_.click_model);
    return row;
  };
  std::vector<ReportRow> rows = {make_row("initial", initial), make_row("greedy", greedy),
                                 make_row("crum", crum)};
  json rows_json = json::array();
  for (const auto& r : rows) rows_json.push_back(to_json(r));
  const double count = std::max<double>(1.0, static_cast<double>(test.requests.size()));
  json diagnostics = {
      {"evaluator_utility",
       {{"initial", reranker::mean_evaluator_utility(model, frozen, test, graphs, initial, mode)},
        {"greedy", reranker::mean_evaluator_utility(model, frozen, test, graphs, greedy, mode)},
        {"crum", reranker::mean_evaluator_utility(model, frozen, test, graphs, crum, mode)}}},
      {"crum_unbiased_utility", unbiased / count},
      {"propensity_evaluated", propensity.evaluated},
      {"propensity_clamped", propensity.clamped},
      {"test_log_loss", evaluator::mean_log_loss(model, frozen, test)}};

  const auto metrics_path = path("reports/metrics.json");
  write_json(metrics_path, {{"rows", rows_json}, {"diagnostics", diagnostics}});
  const auto perm_path = path("reports/permutations.json");
  save_permutations(test, crum, perm_path);
  auto written = emit_report(rows, path("reports"));
  written.insert(written.begin(), {metrics_path, perm_path});
  write_manifest(Stage::kEvaluate, written, diagnostics);
  return written;
}

std::vector<fs::path> Pipeline::oracle_check() {
  const auto test = load_split("test");
  const evaluator::Evaluator model(config_.evaluator_config());
  const ParameterStore frozen =
      load_stage_params(path("checkpoints/evaluator.bin"), config_,
                        Stage::kTrainEvaluator, allow_config_mismatch_);
  const ParameterStore params =
      load_stage_params(path("checkpoints/reranker.bin"), config_,
                        Stage::kTrainReranker, allow_config_mismatch_);
  const reranker::Reranker scorer(config_.reranker_config(), model.graph_width());
  const auto mode = config_.reranker_training.utility;

  data::Dataset sample;
  sample.feature_dim = test.feature_dim;
  sample.n_max = test.n_max;
  for (std::size_t r = 0; r < std::min(config_.oracle.requests, test.requests.size()); ++r) {
    sample.requests.push_back(test.requests[r]);
  }
  sample = data::truncate(sample, config_.oracle.list_size);

  json per_request = json::array();
  std::size_t not_worse = 0;
  double fraction_sum = 0.0;
  for (const auto& request : sample.requests) {
    const Matrix graph = model.graph_embedding(frozen, request);
    const auto weights = reranker::utility_weights(request, mode);
    const oracle::BatchUtilityFn utility = [&](std::span<const Permutation> perms) {
      std::vector<evaluator::ScoringInput> inputs;
      for (const auto& p : perms) inputs.push_back({&request, &p, &graph});
      std::vector<double> values;
      for (const auto& probs : model.predict(frozen, inputs)) {
        values.push_back(evaluator::list_utility(probs, weights));
      }
      return values;
    };
    const auto best = oracle::enumerate_best_permutation(request.size(), utility,
                                                         config_.oracle.n_cap);
    const Permutation crum = reranker::rerank(scorer, params, request, graph);
    const Permutation perms[] = {crum, request.initial};
    const auto values = utility(perms);
    if (values[0] >= values[1]) ++not_worse;
    const double fraction = best.best_utility > 0.0 ? values[0] / best.best_utility : 1.0;
    fraction_sum += fraction;
    per_request.push_back({{"request_id", request.id},
                           {"crum_utility", values[0]},
                           {"initial_utility", values[1]},
                           {"best_utility", best.best_utility},
                           {"best_positions", best.best.positions()},
                           {"visited", best.visited}});
  }
  const double count = std::max<double>(1.0, static_cast<double>(sample.requests.size()));
  const json summary = {{"requests", sample.requests.size()},
                        {"list_size", config_.oracle.list_size},
                        {"share_not_worse_than_initial", static_cast<double>(not_worse) / count},
                        {"mean_fraction_of_best", fraction_sum / count}};
  const auto out = path("reports/oracle.json");
  write_json(out, {{"summary", summary}, {"requests", per_request}});
  write_manifest(Stage::kOracleCheck, {out}, summary);
  return {out};
}

}  // namespace crum::pipeline
