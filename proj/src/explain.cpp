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

#include "courtlens/explain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <unordered_map>

namespace courtlens {

PredictFn predictor(const FittedModel& model, Index output) {
  if (output < 0 || output >= model.n_outputs()) throw Error(ErrorCode::dimension, "output index out of range");
  return [&model, output](const Matrix& X) { return model.predict_column(X, output); };
}

namespace {

std::vector<std::string> default_names(std::vector<std::string> names, Index d) {
  if (names.empty()) {
    for (Index j = 0; j < d; ++j) names.push_back("x" + std::to_string(j));
  }
  if (static_cast<Index>(names.size()) != d) throw Error(ErrorCode::dimension, "one feature name per column required");
  return names;
}

void check_point(const Vector& x, const Matrix& background) {
  if (background.rows() == 0) throw Error(ErrorCode::insufficient_data, "background sample is empty");
  if (x.size() != background.cols()) throw Error(ErrorCode::dimension, "explained point and background disagree on width");
}

// Mean prediction with the features in `mask` fixed to x.
double coalition_value(const PredictFn& f, const Vector& x, const Matrix& background, const std::vector<bool>& mask) {
  Matrix Z = background;
  for (Index j = 0; j < Z.cols(); ++j)
    if (mask[static_cast<std::size_t>(j)]) Z.col(j).setConstant(x(j));
  const Vector p = f(Z);
  return p.mean();
}

}  // namespace

Attribution shapley_exact(const PredictFn& f, const Vector& x, const Matrix& background, std::vector<std::string> feature_names) {
  check_point(x, background);
  const Index d = x.size();
  if (d > kMaxExactShapleyFeatures)
    throw Error(ErrorCode::too_many_features, std::to_string(d) + " features exceed the exact limit of " +
                                                  std::to_string(kMaxExactShapleyFeatures) + "; use shapley_sample");
  const std::size_t n_masks = std::size_t{1} << d;
  std::vector<double> value(n_masks);
  std::vector<bool> mask(static_cast<std::size_t>(d));
  for (std::size_t m = 0; m < n_masks; ++m) {
    for (Index j = 0; j < d; ++j) mask[static_cast<std::size_t>(j)] = (m >> j) & 1U;
    value[m] = coalition_value(f, x, background, mask);
  }

  // weight(s) = s! (d - s - 1)! / d!
  std::vector<double> weight(static_cast<std::size_t>(std::max<Index>(d, 1)));
  for (Index s = 0; s < d; ++s)
    weight[static_cast<std::size_t>(s)] =
        std::exp(std::lgamma(static_cast<double>(s) + 1.0) + std::lgamma(static_cast<double>(d - s)) -
                 std::lgamma(static_cast<double>(d) + 1.0));

  Attribution a;
  a.method = "shapley_exact";
  a.feature_names = default_names(std::move(feature_names), d);
  a.baseline = value[0];
  a.values = Vector::Zero(d);
  for (Index i = 0; i < d; ++i) {
    const std::size_t bit = std::size_t{1} << i;
    double phi = 0.0;
    for (std::size_t m = 0; m < n_masks; ++m) {
      if (m & bit) continue;
      const auto size = static_cast<std::size_t>(std::popcount(m));
      phi += weight[size] * (value[m | bit] - value[m]);
    }
    a.values(i) = phi;
  }
  return a;
}

Attribution shapley_sample(const PredictFn& f, const Vector& x, const Matrix& background, int n_permutations,
                           std::uint64_t seed, std::vector<std::string> feature_names) {
  check_point(x, background);
  if (n_permutations < 1) throw Error(ErrorCode::parameter, "n_permutations must be >= 1");
  const Index d = x.size();
  std::unordered_map<std::vector<bool>, double> cache;
  auto value = [&](const std::vector<bool>& mask) {
    auto it = cache.find(mask);
    if (it != cache.end()) return it->second;
    const double v = coalition_value(f, x, background, mask);
    cache.emplace(mask, v);
    return v;
  };

  Rng rng(seed);
  Vector sum = Vector::Zero(d), sum_sq = Vector::Zero(d);
  std::vector<bool> mask(static_cast<std::size_t>(d));
  const double empty = value(mask);
  for (int p = 0; p < n_permutations; ++p) {
    const auto order = shuffled_indices(d, rng);
    std::fill(mask.begin(), mask.end(), false);
    double prev = empty;
    for (Index j : order) {
      mask[static_cast<std::size_t>(j)] = true;
      const double cur = value(mask);
      const double c = cur - prev;
      sum(j) += c;
      sum_sq(j) += c * c;
      prev = cur;
    }
  }
  const double np = static_cast<double>(n_permutations);
  Attribution a;
  a.method = "shapley_sample";
  a.feature_names = default_names(std::move(feature_names), d);
  a.baseline = empty;
  a.values = sum / np;
  Vector se = Vector::Zero(d);
  if (n_permutations > 1) {
    for (Index j = 0; j < d; ++j) {
      const double var = std::max(0.0, (sum_sq(j) - np * a.values(j) * a.values(j)) / (np - 1.0));
      se(j) = std::sqrt(var / np);
    }
  }
  a.uncertainty = se;
  return a;
}

PermImportance permutation_importance(const PredictFn& f, const Matrix& X, const Vector& y, ImportanceLoss loss,
                                      int repeats, std::uint64_t seed, std::vector<std::string> feature_names) {
  if (repeats < 1) throw Error(ErrorCode::parameter, "repeats must be >= 1");
  if (X.rows() == 0) throw Error(ErrorCode::insufficient_data, "no rows to permute");
  if (y.size() != X.rows()) throw Error(ErrorCode::dimension, "X and y disagree on row count");
  const Index n = X.rows(), d = X.cols();
  const double nn = static_cast<double>(n);
  const Vector base = f(X);
  const double base_error = (y - base).squaredNorm() / nn;

  PermImportance out;
  out.feature_names = default_names(std::move(feature_names), d);
  out.mean = Vector::Zero(d);
  out.std = Vector::Zero(d);
  out.repeats = repeats;
  out.seed = seed;
  out.loss = loss;

  Rng rng(seed);
  for (Index j = 0; j < d; ++j) {
    std::vector<double> scores;
    for (int k = 0; k < repeats; ++k) {
      const auto perm = shuffled_indices(n, rng);
      Matrix Xp = X;
      for (Index i = 0; i < n; ++i) Xp(i, j) = X(perm[static_cast<std::size_t>(i)], j);
      const Vector p = f(Xp);
      scores.push_back(loss == ImportanceLoss::squared_prediction_shift ? (base - p).squaredNorm() / nn
                                                                        : (y - p).squaredNorm() / nn - base_error);
    }
    double m = 0.0;
    for (double s : scores) m += s;
    m /= static_cast<double>(repeats);
    double v = 0.0;
    for (double s : scores) v += (s - m) * (s - m);
    out.mean(j) = m;
    out.std(j) = repeats > 1 ? std::sqrt(v / static_cast<double>(repeats - 1)) : 0.0;
  }
  return out;
}

std::vector<double> quantile_grid(const Vector& column, int points) {
  if (column.size() == 0) throw Error(ErrorCode::insufficient_data, "cannot build a grid from an empty column");
  if (points < 1) throw Error(ErrorCode::parameter, "grid needs at least one point");
  std::vector<double> sorted(column.data(), column.data() + column.size());
  std::sort(sorted.begin(), sorted.end());
  const double last = static_cast<double>(sorted.size() - 1);
  std::vector<double> grid;
  for (int t = 0; t < points; ++t) {
    const double level = points == 1 ? 0.5 : static_cast<double>(t) / static_cast<double>(points - 1);
    const double pos = level * last;
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    grid.push_back(sorted[lo] + frac * (sorted[hi] - sorted[lo]));
  }
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

namespace {

std::vector<double> resolve_grid(const GridSpec& spec, const Vector& column) {
  if (const auto* q = std::get_if<QuantileGrid>(&spec)) return quantile_grid(column, q->points);
  std::vector<double> grid = std::get<std::vector<double>>(spec);
  if (grid.empty()) throw Error(ErrorCode::parameter, "explicit grid is empty");
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

}  // namespace

PdpCurve pdp(const PredictFn& f, const Matrix& X, Index feature, const GridSpec& grid, std::string feature_name) {
  if (X.rows() == 0) throw Error(ErrorCode::insufficient_data, "background sample is empty");
  if (feature < 0 || feature >= X.cols()) throw Error(ErrorCode::dimension, "feature index out of range");
  PdpCurve c;
  c.feature = feature_name.empty() ? "x" + std::to_string(feature) : std::move(feature_name);
  c.grid = resolve_grid(grid, X.col(feature));
  c.n_background = X.rows();
  Matrix Z = X;
  for (double g : c.grid) {
    Z.col(feature).setConstant(g);
    c.values.push_back(f(Z).mean());
  }
  return c;
}

FeatureEffect feature_effect(const LinearFit& fit, const Matrix& X, Index feature, const GridSpec& grid) {
  if (feature < 0 || feature >= fit.weights.size() || X.cols() != fit.weights.size())
    throw Error(ErrorCode::dimension, "feature index or width does not match the fit");
  const double w = fit.weights(feature);
  FeatureEffect e;
  e.feature = static_cast<std::size_t>(feature) < fit.feature_names.size() ? fit.feature_names[static_cast<std::size_t>(feature)]
                                                                           : "x" + std::to_string(feature);
  e.grid = resolve_grid(grid, X.col(feature));
  for (double g : e.grid) e.effect.push_back(w * g);
  for (Index i = 0; i < X.rows(); ++i) {
    e.observed_x.push_back(X(i, feature));
    e.observed_effect.push_back(w * X(i, feature));
  }
  return e;
}

FeatureStats feature_stats(const Matrix& X) {
  FeatureStats s;
  s.mean = X.colwise().mean().transpose();
  s.std.resize(X.cols());
  for (Index j = 0; j < X.cols(); ++j)
    s.std(j) = std::sqrt((X.col(j).array() - s.mean(j)).square().sum() / static_cast<double>(std::max<Index>(X.rows(), 1)));
  return s;
}

double default_kernel_width(Index n_features) { return 0.75 * std::sqrt(static_cast<double>(n_features)); }

SurrogateFit lime_local(const PredictFn& f, const Vector& x, const FeatureStats& stats, int n_samples, double kernel_width,
                        std::uint64_t seed) {
  const Index d = x.size();
  if (stats.std.size() != d) throw Error(ErrorCode::dimension, "feature statistics do not match the point");
  if (n_samples < d + 2) throw Error(ErrorCode::parameter, "lime needs at least d + 2 samples");
  const double width = kernel_width > 0.0 ? kernel_width : default_kernel_width(d);

  Rng rng(seed);
  Matrix U(n_samples, d);  // standardized offsets from x
  Matrix Z(n_samples, d);
  for (Index i = 0; i < n_samples; ++i) {
    for (Index j = 0; j < d; ++j) {
      const double s = stats.std(j);
      const double u = s > 0.0 ? rng.normal() : 0.0;
      U(i, j) = u;
      Z(i, j) = x(j) + s * u;
    }
  }
  const Vector target = f(Z);
  Vector w(n_samples);
  for (Index i = 0; i < n_samples; ++i) w(i) = std::exp(-U.row(i).squaredNorm() / (width * width));
  if (!(w.sum() > 0.0)) throw Error(ErrorCode::kernel_width, "every perturbation received zero kernel weight");

  const LinearFit local = fit_weighted_ridge(U, target, w, 1e-3);
  SurrogateFit out;
  out.kernel_width = width;
  out.n_samples = n_samples;
  out.weights = Vector::Zero(d);
  out.intercept = local.intercept;
  for (Index j = 0; j < d; ++j) {
    if (stats.std(j) > 0.0) {
      out.weights(j) = local.weights(j) / stats.std(j);
      out.intercept -= out.weights(j) * x(j);
    }
  }
  const Vector fitted = (U * local.weights).array() + local.intercept;
  const double wbar = w.dot(target) / w.sum();
  const double ss_tot = (w.array() * (target.array() - wbar).square()).sum();
  const double ss_res = (w.array() * (target - fitted).array().square()).sum();
  if (ss_tot > 0.0) {
    out.fidelity = 1.0 - ss_res / ss_tot;
  } else {
    out.fidelity = 0.0;
    out.fidelity_defined = false;
  }
  return out;
}

}  // namespace courtlens
