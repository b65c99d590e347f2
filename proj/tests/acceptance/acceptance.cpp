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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. Pipeline runs are kept under the work
// directory and reused when their manifests match the current config,
// unless --fresh is given.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "crum/click_model.hpp"
#include "crum/dataset.hpp"
#include "crum/error.hpp"
#include "crum/evaluator.hpp"
#include "crum/graph_embedding.hpp"
#include "crum/initial_rankers.hpp"
#include "crum/metrics.hpp"
#include "crum/oracle.hpp"
#include "crum/parameter_store.hpp"
#include "crum/pipeline.hpp"
#include "crum/random.hpp"
#include "crum/report.hpp"
#include "crum/reranker.hpp"
#include "crum/run_config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace crum;
using pipeline::RunConfig;
using pipeline::Stage;

namespace {

// Tolerances and sizes.
constexpr std::size_t kUnbiasedRequests = 20;
constexpr std::size_t kUnbiasedRequired = 19;
constexpr std::size_t kUnbiasedSamples = 100000;
constexpr double kUnbiasedSigmas = 4.0;
constexpr double kUnbiasedSeconds = 120.0;

constexpr std::size_t kClickRequests = 50;
constexpr std::size_t kClickTrials = 100000;
constexpr double kClickSigmas = 4.0;
constexpr double kClickSeconds = 60.0;

constexpr double kGradTolerance = 1e-4;

constexpr int kGatInstances = 100;
constexpr double kAttentionTolerance = 1e-6;
constexpr double kEquivarianceTolerance = 1e-6;

constexpr std::uint64_t kSeeds[] = {1, 2, 3};
constexpr double kRequiredCtrGain = 0.02;
constexpr double kPipelineSeconds = 30.0 * 60.0;

constexpr double kAblationTie = 0.005;
constexpr double kOracleShare = 0.90;
constexpr double kRecovery = 0.90;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// The synthetic setup shared by the pipeline criteria: 2000 train, 500
// validation and 500 test requests of 10 items with 20 features.
RunConfig base_config(std::uint64_t seed) {
  json j = {{"seed", seed},
            {"dataset",
             {{"source", "synthetic"},
              {"n_requests", 3000},
              {"n_items", 10},
              {"feature_dim", 20},
              {"n_max", 10},
              {"split", {{"train", 2000.0 / 3000.0},
                         {"validation", 500.0 / 3000.0},
                         {"test", 500.0 / 3000.0}}}}},
            {"click_model", {{"eta", 0.7}, {"threshold", 1}}},
            {"oracle", {{"requests", 100}, {"list_size", 5}}}};
  return pipeline::config_from_json(j);
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  return json::parse(in);
}

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Materialises pipeline runs on demand.
class Runs {
 public:
  Runs(fs::path root, bool fresh) : root_(std::move(root)) {
    if (fresh) fs::remove_all(root_);
    fs::create_directories(root_);
  }

  const fs::path& root() const { return root_; }

  // Full CRUM run for `seed`; returns its directory.
  fs::path base(std::uint64_t seed) {
    const fs::path dir = root_ / ("seed" + std::to_string(seed));
    ensure(base_config(seed), dir, {std::begin(pipeline::kAllStages), std::end(pipeline::kAllStages)});
    return dir;
  }

  // Ablation variant sharing the data, initial ranker and click logs of
  // the base run.
  fs::path variant(std::uint64_t seed, const std::string& flag) {
    const fs::path dir = root_ / ("seed" + std::to_string(seed) + "-" + flag);
    RunConfig config = base_config(seed);
    if (flag == "bl") config.ablation.disable_bilstm = true;
    if (flag == "gat") config.ablation.disable_gat = true;
    if (flag == "ge") config.ablation.disable_graph_in_reranker = true;
    seed_from(base(seed), dir);
    ensure(config, dir, {Stage::kTrainEvaluator, Stage::kTrainReranker, Stage::kEvaluate});
    return dir;
  }

  // Same data as the base run, ranked by the reversed pointwise ranker.
  fs::path reverse(std::uint64_t seed) {
    const fs::path dir = root_ / ("seed" + std::to_string(seed) + "-reverse");
    RunConfig config = base_config(seed);
    config.initial_ranker = rankers::RankerKind::kReverse;
    seed_from(base(seed), dir);
    ensure(config, dir,
           {Stage::kTrainInitial, Stage::kSimulateClicks, Stage::kTrainEvaluator,
            Stage::kTrainReranker, Stage::kEvaluate});
    return dir;
  }

  double trained_seconds() const { return trained_seconds_; }

 private:
  static bool current(const RunConfig& config, const fs::path& dir, Stage stage) {
    const fs::path manifest = dir / "manifests" / (std::string(pipeline::stage_name(stage)) + ".json");
    if (!fs::exists(manifest)) return false;
    return read_json(manifest).at("config_hash") == pipeline::stage_hash(config, stage);
  }

  void ensure(const RunConfig& config, const fs::path& dir, const std::vector<Stage>& stages) {
    pipeline::Pipeline p(config, dir);
    bool rerun = false;  // once a stage reruns, everything after it does
    for (Stage s : stages) {
      if (!rerun && current(config, dir, s)) continue;
      rerun = true;
      std::cerr << "  running " << pipeline::stage_name(s) << " in " << dir.string() << "\n";
      const auto start = Clock::now();
      p.run(s);
      trained_seconds_ += seconds_since(start);
    }
  }

  static void seed_from(const fs::path& source, const fs::path& dir) {
    if (fs::exists(dir / "manifests" / "prepare.json")) return;
    fs::remove_all(dir);
    fs::copy(source, dir, fs::copy_options::recursive);
  }

  fs::path root_;
  double trained_seconds_ = 0.0;
};

// Test split and frozen evaluator of a run.
struct TrainedEvaluator {
  RunConfig config;
  data::Dataset test;
  evaluator::Evaluator model;
  ParameterStore params;

  explicit TrainedEvaluator(const fs::path& dir, RunConfig cfg)
      : config(std::move(cfg)),
        test(pipeline::Pipeline(config, dir).load_split("test")),
        model(config.evaluator_config()),
        params(ParameterStore::load(dir / "checkpoints" / "evaluator.bin")) {}
};

// 1. Importance-weighted utility is unbiased for the counterfactual utility.
Outcome unbiasedness(Runs& runs) {
  const TrainedEvaluator trained(runs.base(kSeeds[0]), base_config(kSeeds[0]));
  const auto start = Clock::now();
  data::Dataset sample;
  sample.feature_dim = trained.test.feature_dim;
  for (std::size_t r = 0; r < kUnbiasedRequests; ++r) {
    sample.requests.push_back(trained.test.requests[r]);
  }
  sample = data::truncate(sample, 5);
  const double floor = trained.config.propensity_floor;

  std::size_t within = 0;
  double worst = 0.0, gap = 0.0;
  for (std::size_t r = 0; r < sample.requests.size(); ++r) {
    const auto& request = sample.requests[r];
    const Matrix graph = trained.model.graph_embedding(trained.params, request);
    const auto logged = trained.model.predict_click_probs(trained.params, request,
                                                          request.initial, graph);
    const Permutation pi = rankers::random_permutation(5, derive_seed(17, r));
    const auto counterfactual = trained.model.predict_click_probs(trained.params, request, pi, graph);
    const double truth = evaluator::list_utility(counterfactual, request.bids);
    // Gap between the evaluator's utility and the click model's, reported only.
    const auto oracle_probs = clicks::expected_clicks(request, pi, trained.config.click_model,
                                                      request.relevance());
    gap += std::abs(truth - evaluator::list_utility(oracle_probs, request.bids));

    Rng rng(derive_seed(29, r));
    std::vector<int> clicks(request.size());
    double mean = 0.0, m2 = 0.0;
    for (std::size_t t = 0; t < kUnbiasedSamples; ++t) {
      for (std::size_t i = 0; i < clicks.size(); ++i) clicks[i] = rng.bernoulli(logged[i]);
      const double u = evaluator::unbiased_utility(clicks, counterfactual, logged,
                                                   request.bids, floor);
      const double d = u - mean;
      mean += d / static_cast<double>(t + 1);
      m2 += d * (u - mean);
    }
    const double se = std::sqrt(m2 / static_cast<double>(kUnbiasedSamples - 1) /
                                static_cast<double>(kUnbiasedSamples));
    const double z = se > 0.0 ? std::abs(mean - truth) / se : (mean == truth ? 0.0 : INFINITY);
    worst = std::max(worst, z);
    if (z <= kUnbiasedSigmas) ++within;
  }
  const double elapsed = seconds_since(start);
  return {within >= kUnbiasedRequired && elapsed < kUnbiasedSeconds,
          fmt("%zu/%zu requests within %.0f standard errors (need %zu), worst |z| %.2f, %.1f s; "
              "mean |evaluator - click model| utility gap %.4f",
              within, sample.requests.size(), kUnbiasedSigmas, kUnbiasedRequired, worst, elapsed,
              gap / static_cast<double>(sample.requests.size()))};
}

// 2. The exact click marginals agree with simulation.
Outcome click_model_consistency() {
  const auto start = Clock::now();
  const auto dataset = data::binarize_labels(data::generate_synthetic(kClickRequests, 10, 20, 2024), 1);
  const clicks::ClickModelConfig config;
  std::size_t items = 0, agree = 0;
  double worst = 0.0;
  for (std::size_t r = 0; r < dataset.requests.size(); ++r) {
    auto request = dataset.requests[r];
    request.initial = rankers::random_permutation(request.size(), derive_seed(5, r));
    const auto relevance = request.relevance();
    const auto exact = clicks::expected_clicks(request, request.initial, config, relevance);
    std::vector<double> counts(request.size(), 0.0);
    for (std::size_t t = 0; t < kClickTrials; ++t) {
      const auto log = clicks::sample_clicks(request, request.initial, config, relevance,
                                             derive_seed(derive_seed(11, r), t));
      for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += log.clicks[i];
    }
    for (std::size_t i = 0; i < counts.size(); ++i) {
      const double p = exact[i];
      const double freq = counts[i] / static_cast<double>(kClickTrials);
      const double tol = kClickSigmas * std::sqrt(p * (1 - p) / static_cast<double>(kClickTrials));
      const double err = std::abs(freq - p);
      if (err <= tol) ++agree;
      if (tol > 0.0) worst = std::max(worst, err / tol * kClickSigmas);
      ++items;
    }
  }
  const double elapsed = seconds_since(start);
  return {agree == items && elapsed < kClickSeconds,
          fmt("%zu/%zu items within %.0f sigma, worst %.2f sigma, %.1f s", agree, items,
              kClickSigmas, worst, elapsed)};
}

data::RankedRequest miniature_request(Index n, Index d, std::uint64_t seed) {
  Rng rng(seed);
  data::RankedRequest r;
  r.id = "mini";
  r.features.resize(n, d);
  for (Index i = 0; i < r.features.size(); ++i) r.features.data()[i] = rng.uniform(-1, 1);
  r.bids.assign(static_cast<std::size_t>(n), 1.0);
  std::vector<int> clicks;
  for (Index i = 0; i < n; ++i) {
    r.graded_labels.push_back(static_cast<int>(i % 2) * 2);
    r.binary_labels.push_back(static_cast<int>(i % 2));
    clicks.push_back(static_cast<int>((i + seed) % 2));
  }
  r.initial = rankers::random_permutation(static_cast<std::size_t>(n), seed);
  r.clicks = clicks;
  return r;
}

// 3. Analytic gradients of the evaluator and reranker losses.
Outcome gradients() {
  // Smooth activations keep the central differences away from ReLU kinks.
  evaluator::EvaluatorConfig ec;
  ec.feature_dim = 3;
  ec.n_max = 2;
  ec.lstm_hidden = 4;
  ec.mlp_hidden = {6, 4};
  ec.activation = nn::Activation::kTanh;
  ec.gat.layers = 2;
  ec.gat.heads = 2;
  ec.gat.width = 4;
  const evaluator::Evaluator ev(ec);
  const auto a = miniature_request(2, 3, 1);
  const auto b = miniature_request(2, 3, 2);
  const Permutation swapped = b.initial.reversed();
  const std::vector<evaluator::TrainingExample> logs = {{&a, &a.initial, *a.clicks},
                                                        {&b, &swapped, *b.clicks}};
  const auto ev_result = oracle::finite_difference_gradcheck(
      [&](const ParameterStore& p, ParameterStore* g) { return ev.loss_and_gradient(p, logs, g); },
      ev.init_parameters(3));

  reranker::RerankerConfig rc;
  rc.feature_dim = 3;
  rc.n_max = 2;
  rc.mlp_hidden = {6, 4};
  rc.activation = nn::Activation::kTanh;
  const reranker::Reranker rr(rc, ev.graph_width());
  const Matrix graph = ev.graph_embedding(ev.init_parameters(3), a);
  const std::vector<reranker::Pair> pair = {
      a.initial.position(0) > a.initial.position(1) ? reranker::Pair{0, 1} : reranker::Pair{1, 0}};
  const std::vector<double> delta = {0.37};
  const std::vector<reranker::Reranker::Example> batch = {{&a, &graph, pair, delta}};
  const auto rr_result = oracle::finite_difference_gradcheck(
      [&](const ParameterStore& p, ParameterStore* g) { return rr.loss_and_gradient(p, batch, g); },
      rr.init_parameters(4));

  return {ev_result.max_relative_error < kGradTolerance &&
              rr_result.max_relative_error < kGradTolerance,
          fmt("evaluator max rel err %.2e (max abs %.1e) over %zu coords, reranker %.2e (max abs "
              "%.1e) over %zu coords (limit %.0e)",
              ev_result.max_relative_error, ev_result.max_absolute_error, ev_result.coordinates,
              rr_result.max_relative_error, rr_result.max_absolute_error, rr_result.coordinates,
              kGradTolerance)};
}

// 4. Attention rows are distributions and the embedding is equivariant to
// the storage order of the items.
Outcome attention() {
  Rng rng(404);
  double worst_row = 0.0, worst_equiv = 0.0;
  for (int k = 0; k < kGatInstances; ++k) {
    const auto n = static_cast<Index>(2 + rng.uniform_index(9));
    gat::GatConfig c;
    c.input_dim = static_cast<Index>(2 + rng.uniform_index(7));
    c.n_max = 10;
    c.layers = static_cast<int>(1 + rng.uniform_index(3));
    c.heads = static_cast<int>(1 + rng.uniform_index(4));
    c.width = c.heads * static_cast<Index>(1 + rng.uniform_index(4));
    const gat::GraphEmbedding g(c);
    ParameterStore params;
    Rng init(derive_seed(405, static_cast<std::uint64_t>(k)));
    g.add_parameters(params, init);
    Matrix x(n, c.input_dim);
    for (Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-2, 2);
    const Permutation initial =
        rankers::random_permutation(static_cast<std::size_t>(n), derive_seed(406, k));

    gat::GatCache cache;
    const Matrix h = g.embed(params, x, initial, &cache);
    for (const auto& layer : cache.layers) {
      for (const auto& alpha : layer.attention) {
        worst_row = std::max(worst_row, (alpha.rowwise().sum().array() - 1.0).abs().maxCoeff());
      }
    }

    // Relabel storage slot i as slot sigma[i].
    const Permutation sigma_perm =
        rankers::random_permutation(static_cast<std::size_t>(n), derive_seed(407, k));
    Matrix x2(n, c.input_dim);
    std::vector<int> positions(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
      const auto to = static_cast<Index>(sigma_perm.position(static_cast<std::size_t>(i)) - 1);
      x2.row(to) = x.row(i);
      positions[static_cast<std::size_t>(to)] = initial.position(static_cast<std::size_t>(i));
    }
    const Matrix h2 = g.embed(params, x2, Permutation(positions));
    for (Index i = 0; i < n; ++i) {
      const auto to = static_cast<Index>(sigma_perm.position(static_cast<std::size_t>(i)) - 1);
      worst_equiv = std::max(worst_equiv, (h2.row(to) - h.row(i)).cwiseAbs().maxCoeff());
    }
  }
  return {worst_row <= kAttentionTolerance && worst_equiv <= kEquivarianceTolerance,
          fmt("%d instances, max |row sum - 1| %.1e, max equivariance gap %.1e (limits %.0e, %.0e)",
              kGatInstances, worst_row, worst_equiv, kAttentionTolerance, kEquivarianceTolerance)};
}

std::map<std::string, metrics::MetricsReport> rows_by_role(const fs::path& dir) {
  std::map<std::string, metrics::MetricsReport> out;
  for (const auto& row : pipeline::load_run_rows(dir)) out[row.role] = row.metrics;
  return out;
}

// Exact CTR of the test lists sorted by their binary labels (ties keep the
// initial order): an upper reference for how far reranking could move CTR.
double label_sorted_ctr(const fs::path& dir, std::uint64_t seed) {
  const RunConfig config = base_config(seed);
  const auto test = pipeline::Pipeline(config, dir).load_split("test");
  std::vector<Permutation> perms;
  for (const auto& r : test.requests) {
    std::vector<double> labels(r.binary_labels.begin(), r.binary_labels.end());
    std::vector<int> tie(r.initial.positions());
    perms.push_back(Permutation::from_scores(labels, tie));
  }
  return metrics::oracle_utility_metrics(test, perms, config.click_model).ctr;
}

// 5. CRUM beats the initial ranker and the greedy baseline on oracle CTR.
Outcome utility_improvement(Runs& runs) {
  const double trained_before = runs.trained_seconds();
  double initial = 0.0, greedy = 0.0, crum = 0.0, ceiling = 0.0;
  std::size_t train_size = 0, test_size = 0;
  for (std::uint64_t seed : kSeeds) {
    const fs::path dir = runs.base(seed);
    auto rows = rows_by_role(dir);
    initial += rows.at("initial").ctr;
    greedy += rows.at("greedy").ctr;
    crum += rows.at("crum").ctr;
    test_size = rows.at("crum").num_requests;
    ceiling += label_sorted_ctr(dir, seed);
    train_size = data::load_dataset(dir / "data" / "train.json").requests.size();
  }
  const double k = static_cast<double>(std::size(kSeeds));
  initial /= k, greedy /= k, crum /= k, ceiling /= k;
  const double trained = runs.trained_seconds() - trained_before;
  const bool timed = trained > 0.0;
  const double gain = crum / initial - 1.0;
  const bool pass = gain >= kRequiredCtrGain && crum >= greedy &&
                    (!timed || trained < kPipelineSeconds);
  return {pass,
          fmt("%zu train / %zu test, mean CTR over %zu seeds: crum %.5f, initial %.5f (%+.2f%%, need "
              "%+.0f%%), greedy %.5f; label-sorted ceiling %.5f (%+.2f%% over initial); %s",
              train_size, test_size, std::size(kSeeds), crum, initial, 100 * gain,
              100 * kRequiredCtrGain, greedy, ceiling, 100 * (ceiling / initial - 1.0),
              timed ? fmt("pipelines took %.1f min", trained / 60.0).c_str()
                    : "pipelines reused, runtime not measured")};
}

// 6. Removing any component does not help.
Outcome ablation_order(Runs& runs) {
  const std::vector<std::pair<std::string, std::string>> variants = {
      {"bl", "crum(-BL)"}, {"gat", "crum(-GAT)"}, {"ge", "crum(-GE)"}};
  double full = 0.0;
  std::map<std::string, double> ctr;
  for (std::uint64_t seed : kSeeds) {
    full += rows_by_role(runs.base(seed)).at("crum").ctr;
    for (const auto& [flag, name] : variants) {
      ctr[name] += rows_by_role(runs.variant(seed, flag)).at("crum").ctr;
    }
  }
  const double k = static_cast<double>(std::size(kSeeds));
  full /= k;
  bool pass = true;
  std::string detail = fmt("crum %.5f", full);
  for (const auto& [flag, name] : variants) {
    const double v = ctr[name] / k;
    pass = pass && full >= v * (1.0 - kAblationTie);
    detail += fmt(", %s %.5f", name.c_str(), v);
  }
  return {pass, detail + fmt(" (mean CTR over %zu seeds, ties within %.1f%%)", std::size(kSeeds),
                             100 * kAblationTie)};
}

// 7. CRUM's list is rarely worse than the initial one under the evaluator.
Outcome oracle_regret(Runs& runs) {
  const auto summary = read_json(runs.base(kSeeds[0]) / "reports" / "oracle.json").at("summary");
  const double share = summary.at("share_not_worse_than_initial").get<double>();
  return {share >= kOracleShare,
          fmt("%zu held-out %zu-item requests: crum not worse than initial on %.0f%% (need %.0f%%), "
              "mean fraction of exhaustive best %.4f",
              summary.at("requests").get<std::size_t>(), summary.at("list_size").get<std::size_t>(),
              100 * share, 100 * kOracleShare, summary.at("mean_fraction_of_best").get<double>())};
}

// 8. CRUM holds up when the initial ranker is bad.
Outcome robustness(Runs& runs) {
  const std::uint64_t seed = kSeeds[0];
  const fs::path good_dir = runs.base(seed);
  const fs::path bad_dir = runs.reverse(seed);
  const auto good = rows_by_role(good_dir);
  const auto bad = rows_by_role(bad_dir);
  std::vector<pipeline::ReportRow> rows = pipeline::load_run_rows(good_dir);
  for (auto& row : pipeline::load_run_rows(bad_dir)) rows.push_back(std::move(row));
  const fs::path plot_dir = runs.root() / "robustness";
  pipeline::emit_report(rows, plot_dir);

  const double recovered = bad.at("crum").ctr / good.at("crum").ctr;
  const double initial_kept = bad.at("initial").ctr / good.at("initial").ctr;
  return {recovered >= kRecovery && recovered >= initial_kept,
          fmt("crum keeps %.1f%% of its CTR (%.5f vs %.5f, need %.0f%%), initial ranker keeps "
              "%.1f%% (%.5f vs %.5f); plot %s",
              100 * recovered, bad.at("crum").ctr, good.at("crum").ctr, 100 * kRecovery,
              100 * initial_kept, bad.at("initial").ctr, good.at("initial").ctr,
              (plot_dir / "initial_quality_ctr.svg").string().c_str())};
}

// 9. Re-running every stage reproduces every artifact.
Outcome determinism(Runs& runs) {
  const std::uint64_t seed = kSeeds[0];
  const fs::path first = runs.base(seed);
  const fs::path second = runs.root() / ("seed" + std::to_string(seed) + "-rerun");
  fs::remove_all(second);
  pipeline::Pipeline(base_config(seed), second).run_all();

  std::vector<std::string> differing;
  std::size_t compared = 0;
  for (const char* sub : {"data", "clicks", "logs", "reports"}) {
    for (const auto& entry : fs::directory_iterator(first / sub)) {
      const fs::path rel = fs::relative(entry.path(), first);
      if (rel.filename() == "metrics.json" || rel.extension() == ".csv" ||
          rel.filename() == "table.json") {
        // Rows carry the run directory name. The tables render the metrics rows, so
        // comparing metrics.json without the name covers them.
        if (rel.filename() == "metrics.json") {
          auto a = read_json(first / rel), b = read_json(second / rel);
          for (auto* m : {&a, &b}) {
            for (auto& row : (*m)["rows"]) row.erase("run");
          }
          if (a != b) differing.push_back(rel.string());
          ++compared;
        }
        continue;
      }
      ++compared;
      if (read_bytes(first / rel) != read_bytes(second / rel)) differing.push_back(rel.string());
    }
  }
  for (const char* ckpt : {"ranker.bin", "evaluator.bin", "reranker.bin"}) {
    ++compared;
    const auto a = ParameterStore::load(first / "checkpoints" / ckpt);
    const auto b = ParameterStore::load(second / "checkpoints" / ckpt);
    if (!a.same_values(b)) differing.push_back(std::string("checkpoints/") + ckpt);
  }
  std::string detail = fmt("%zu artifacts compared across two full runs", compared);
  for (const auto& d : differing) detail += ", differs: " + d;
  return {differing.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CRUM acceptance checks"};
  std::string work_dir = "acceptance-runs";
  bool fresh = false;
  std::vector<int> only;
  app.add_option("--work-dir", work_dir, "Directory for pipeline runs");
  app.add_flag("--fresh", fresh, "Discard previous runs first");
  app.add_option("--criteria", only, "Run only these criteria (1-9)");
  CLI11_PARSE(app, argc, argv);

  Runs runs(work_dir, fresh);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"unbiased utility", [&] { return unbiasedness(runs); }},
      {"click model vs simulation", [] { return click_model_consistency(); }},
      {"gradient checks", [] { return gradients(); }},
      {"attention normalisation and equivariance", [] { return attention(); }},
      {"CTR over initial and greedy", [&] { return utility_improvement(runs); }},
      {"ablation ordering", [&] { return ablation_order(runs); }},
      {"oracle regret", [&] { return oracle_regret(runs); }},
      {"bad initial ranker", [&] { return robustness(runs); }},
      {"determinism", [&] { return determinism(runs); }},
  };

  int failures = 0;
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    const int id = static_cast<int>(c + 1);
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome outcome;
    try {
      outcome = criteria[c].second();
    } catch (const std::exception& e) {
      outcome = {false, std::string("error: ") + e.what()};
    }
    if (!outcome.pass) ++failures;
    std::cout << "criterion " << id << " " << (outcome.pass ? "PASS" : "FAIL") << " "
              << criteria[c].first << ": " << outcome.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
