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

// Command-line driver for the staged pipeline.

#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "crum/dataset.hpp"
#include "crum/error.hpp"
#include "crum/pipeline.hpp"
#include "crum/report.hpp"
#include "crum/run_config.hpp"

namespace fs = std::filesystem;
using crum::pipeline::Pipeline;
using crum::pipeline::RunConfig;

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "crum-run";
  bool allow_mismatch = false;
};

RunConfig resolve_config(const CommonOptions& opts) {
  RunConfig config = opts.config_path.empty()
                         ? RunConfig{}
                         : crum::pipeline::load_config(opts.config_path);
  if (opts.seed) config.seed = *opts.seed;
  return config;
}

void print_paths(const std::vector<fs::path>& paths) {
  for (const auto& p : paths) std::cout << p.string() << '\n';
}

int fail(crum::ErrorCategory category, const std::string& message) {
  const int code = crum::exit_code(category);
  nlohmann::json err = {{"error",
                         {{"category", crum::category_name(category)},
                          {"message", message},
                          {"exit_code", code}}}};
  std::cerr << err.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Counterfactual reranking pipeline"};
  app.require_subcommand(1);
  CommonOptions opts;
  app.add_option("--config", opts.config_path, "JSON run config")->check(CLI::ExistingFile);
  app.add_option("--seed", opts.seed, "Override the config seed");
  app.add_option("--out-dir", opts.out_dir, "Run directory");
  app.add_flag("--allow-config-mismatch", opts.allow_mismatch,
               "Accept upstream artifacts produced with a different config");

  std::vector<std::pair<CLI::App*, crum::pipeline::Stage>> stages;
  for (auto stage : crum::pipeline::kAllStages) {
    const std::string name(crum::pipeline::stage_name(stage));
    stages.emplace_back(app.add_subcommand(name, "Run the " + name + " stage"), stage);
  }
  auto* all = app.add_subcommand("all", "Run every stage in order");

  auto* rerank = app.add_subcommand("rerank", "Rerank a dataset archive with a trained run");
  std::string rerank_input, rerank_output;
  rerank->add_option("--input", rerank_input, "Dataset archive")->required()->check(CLI::ExistingFile);
  rerank->add_option("--output", rerank_output, "Permutation archive to write")->required();

  auto* report = app.add_subcommand("report", "Compare evaluated runs");
  std::vector<std::string> report_runs;
  report->add_option("--runs", report_runs, "Run directories")->required();

  auto* show = app.add_subcommand("show-config", "Print the effective config");

  CLI11_PARSE(app, argc, argv);

  try {
    const RunConfig config = resolve_config(opts);
    if (show->parsed()) {
      std::cout << crum::pipeline::to_json(config).dump(2) << '\n';
      return 0;
    }
    if (report->parsed()) {
      std::vector<crum::pipeline::ReportRow> rows;
      for (const auto& run : report_runs) {
        auto more = crum::pipeline::load_run_rows(run);
        rows.insert(rows.end(), more.begin(), more.end());
      }
      print_paths(crum::pipeline::emit_report(std::move(rows), opts.out_dir));
      return 0;
    }
    Pipeline pipeline(config, opts.out_dir, opts.allow_mismatch);
    if (all->parsed()) {
      pipeline.run_all();
      return 0;
    }
    if (rerank->parsed()) {
      const auto dataset = crum::data::load_dataset(rerank_input);
      crum::pipeline::save_permutations(dataset, pipeline.rerank(dataset), rerank_output);
      std::cout << rerank_output << '\n';
      return 0;
    }
    for (const auto& [cmd, stage] : stages) {
      if (cmd->parsed()) print_paths(pipeline.run(stage));
    }
    return 0;
  } catch (const crum::Error& e) {
    return fail(e.category(), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(crum::ErrorCategory::kSchema, e.what());
  } catch (const std::exception& e) {
    return fail(crum::ErrorCategory::kIo, e.what());
  }
}
