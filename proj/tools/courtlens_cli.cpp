// Copyright 2026 The courtlens Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "courtlens/fixtures.hpp"
#include "courtlens/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

int exit_code(courtlens::ErrorKind kind) {
  switch (kind) {
    case courtlens::ErrorKind::usage: return 2;
    case courtlens::ErrorKind::data: return 3;
    case courtlens::ErrorKind::numeric: return 4;
  }
  return 3;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace courtlens;
  CLI::App app{"courtlens: explainable models for basketball box statistics"};
  app.set_version_flag("--version", tool_version());
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::string config_path;
  app.add_option("--seed", seed, "Override the config seed");
  app.add_option("--out-dir", out_dir, "Override the output directory");
  app.add_option("--config", config_path, "Pipeline config (flat JSON)");

  std::string kind;
  Index n = 500;
  std::string out_csv;
  auto* fixture = app.add_subcommand("make-fixture", "Write a synthetic dataset and its ground-truth sidecar");
  fixture->add_option("--kind", kind, "four_factors, roles or salary")->required();
  fixture->add_option("--n", n, "Row count (>= 50)");
  fixture->add_option("--out", out_csv, "CSV path")->required();

  std::vector<std::pair<std::string, CLI::App*>> stages;
  for (const auto& s : stage_names()) stages.emplace_back(s, app.add_subcommand(s, "Run the " + s + " stage"));
  auto* run_cmd = app.add_subcommand("run", "Run every stage in order");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  std::string stage = "config";
  try {
    if (fixture->parsed()) {
      stage = "make-fixture";
      write_fixture(make_fixture(kind, n, seed.value_or(0)), out_csv);
      return 0;
    }
    if (config_path.empty()) throw Error(ErrorCode::usage, "--config is required");
    PipelineConfig cfg = load_config(config_path);
    apply_overrides(cfg, seed, out_dir ? std::optional<std::filesystem::path>(*out_dir) : std::nullopt);
    if (run_cmd->parsed()) {
      run(cfg);
      return 0;
    }
    for (const auto& [name, cmd] : stages) {
      if (cmd->parsed()) {
        run_stage(name, cfg);
        return 0;
      }
    }
    return 2;
  } catch (const StageError& e) {
    std::cerr << "courtlens: " << e.stage() << ": " << to_string(e.code()) << ": " << e.detail() << "\n";
    return exit_code(e.kind());
  } catch (const Error& e) {
    std::cerr << "courtlens: " << stage << ": " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "courtlens: " << stage << ": " << e.what() << "\n";
    return 3;
  }
}
