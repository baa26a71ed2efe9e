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

#ifndef COURTLENS_PIPELINE_HPP
#define COURTLENS_PIPELINE_HPP

#include "courtlens/tabular.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace courtlens {

/// Parsed form of the flat JSON config. `raw` keeps the document as given
/// (with command-line overrides applied) and is echoed into every report.
struct PipelineConfig {
  nlohmann::json raw;
  std::filesystem::path input;
  std::string target;
  std::vector<std::string> features;  // empty: every numeric column but the target
  std::string task;                   // "regression" or "classification"; empty: infer

  std::string model = "ols";  // ols ridge lasso huber tweedie tree mlp
  double alpha = -1.0;        // negative: model default
  double epsilon = 1.35;
  double power = 1.5;
  std::string link;  // empty: log for power > 0, identity otherwise
  int max_depth = 4;
  Index min_leaf = 1;
  std::vector<Index> hidden;  // empty: model default
  std::vector<double> dropout;
  int epochs = -1;
  Index batch_size = -1;
  double learning_rate = -1.0;

  int poly_degree = 1;
  std::vector<int> poly_compare;

  bool scale = true;
  ImputeStrategy impute = ImputeStrategy::drop_rows;
  double test_fraction = 0.2;

  std::string reduce = "none";  // none pca mds isomap tsne lda
  Index reduce_k = 2;
  Index reduce_neighbors = 8;

  std::vector<std::string> explain;  // weights shapley permutation pdp feature_effect lime
  Index explain_row = 0;             // row of the test split
  Index explain_class = 0;
  Index background_rows = 50;
  int shapley_permutations = 200;
  int importance_repeats = 5;
  int pdp_points = 20;
  Index pdp_features = 3;
  int lime_samples = 500;

  std::string anova_value;
  std::string anova_group;
  double anova_alpha = 0.05;

  std::vector<std::string> plots;  // weight_plot pdp scree box_by_group scatter
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 0;
};

/// Relative paths in the document resolve against base_dir.
PipelineConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);
/// Applies --seed / --out-dir; the seed override is recorded in cfg.raw.
void apply_overrides(PipelineConfig& cfg, std::optional<std::uint64_t> seed,
                     std::optional<std::filesystem::path> out_dir);

/// Stage order. Each stage reads the previous stages' files from out_dir and
/// writes its own, so running them one by one equals run().
inline const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names{"ingest", "reduce", "fit", "explain", "anova", "report"};
  return names;
}

void stage_ingest(const PipelineConfig& cfg);
void stage_reduce(const PipelineConfig& cfg);
void stage_fit(const PipelineConfig& cfg);
void stage_explain(const PipelineConfig& cfg);
void stage_anova(const PipelineConfig& cfg);
void stage_report(const PipelineConfig& cfg);
void run_stage(const std::string& stage, const PipelineConfig& cfg);

/// An Error raised inside a named stage.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause);
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// All stages in order. A failure removes any stale report.json and
/// rethrows as StageError.
void run(const PipelineConfig& cfg);

std::string tool_version();

}  // namespace courtlens

#endif  // COURTLENS_PIPELINE_HPP
