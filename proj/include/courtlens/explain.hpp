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

#ifndef COURTLENS_EXPLAIN_HPP
#define COURTLENS_EXPLAIN_HPP

#include "courtlens/attribution.hpp"
#include "courtlens/model.hpp"

#include <functional>
#include <string>
#include <variant>
#include <vector>

namespace courtlens {

/// Any batch predictor: rows in, one prediction per row out. Explainers only
/// ever call it, so they work for every model family.
using PredictFn = std::function<Vector(const Matrix&)>;

/// Adapts a fitted model; for classifiers `output` selects the class probability.
PredictFn predictor(const FittedModel& model, Index output = 0);

inline constexpr Index kMaxExactShapleyFeatures = 16;

/// Exact Shapley values by enumerating all 2^d coalitions. A coalition's
/// value is the mean prediction with its features fixed to x and the rest
/// taken from each background row in turn.
Attribution shapley_exact(const PredictFn& f, const Vector& x, const Matrix& background,
                          std::vector<std::string> feature_names = {});

/// Monte-Carlo permutation estimate with per-feature standard errors.
Attribution shapley_sample(const PredictFn& f, const Vector& x, const Matrix& background, int n_permutations,
                           std::uint64_t seed, std::vector<std::string> feature_names = {});

enum class ImportanceLoss { squared_prediction_shift, error_increase };

struct PermImportance {
  std::vector<std::string> feature_names;
  Vector mean;
  Vector std;
  int repeats = 1;
  std::uint64_t seed = 0;
  ImportanceLoss loss = ImportanceLoss::squared_prediction_shift;
};

PermImportance permutation_importance(const PredictFn& f, const Matrix& X, const Vector& y, ImportanceLoss loss,
                                      int repeats, std::uint64_t seed, std::vector<std::string> feature_names = {});

struct QuantileGrid {
  int points = 20;
};
using GridSpec = std::variant<std::vector<double>, QuantileGrid>;

/// Sorted, deduplicated quantiles (linear interpolation) of a column.
std::vector<double> quantile_grid(const Vector& column, int points);

struct PdpCurve {
  std::string feature;
  std::vector<double> grid;
  std::vector<double> values;
  Index n_background = 0;
};

PdpCurve pdp(const PredictFn& f, const Matrix& X, Index feature, const GridSpec& grid = QuantileGrid{},
             std::string feature_name = {});

struct FeatureEffect {
  std::string feature;
  std::vector<double> grid;
  std::vector<double> effect;  // w_j * grid
  std::vector<double> observed_x;
  std::vector<double> observed_effect;
};

FeatureEffect feature_effect(const LinearFit& fit, const Matrix& X, Index feature, const GridSpec& grid = QuantileGrid{});

struct FeatureStats {
  Vector mean;
  Vector std;
};

FeatureStats feature_stats(const Matrix& X);

struct SurrogateFit {
  Vector weights;
  double intercept = 0.0;
  double kernel_width = 0.0;
  int n_samples = 0;
  double fidelity = 0.0;
  bool fidelity_defined = true;
};

/// 0.75 * sqrt(d) in standardized units.
double default_kernel_width(Index n_features);

SurrogateFit lime_local(const PredictFn& f, const Vector& x, const FeatureStats& stats, int n_samples = 500,
                        double kernel_width = 0.0, std::uint64_t seed = 0);

}  // namespace courtlens

#endif  // COURTLENS_EXPLAIN_HPP
