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
#include "courtlens/model.hpp"
#include "courtlens/tabular.hpp"

#include "test_support.hpp"

#include <algorithm>
#include <numeric>

namespace courtlens {
namespace {

PredictFn linear_fn(Vector w, double b = 0.0) {
  return [w, b](const Matrix& X) { return Vector((X * w).array() + b); };
}

PredictFn constant_fn(double c) {
  return [c](const Matrix& X) { return Vector::Constant(X.rows(), c); };
}

// A non-additive model with interactions and a kink.
Vector nonlinear(const Matrix& X) {
  Vector out(X.rows());
  for (Index i = 0; i < X.rows(); ++i) {
    const auto r = X.row(i);
    double v = r(0) * r(1) + std::max(0.0, r(2)) - 0.5 * r(0);
    for (Index j = 3; j < X.cols(); ++j) v += std::sin(r(j)) * (j % 2 ? r(0) : 1.0);
    out(i) = v;
  }
  return out;
}

/// Shapley values as the average marginal contribution over every feature
/// order, with the same interventional value function.
Vector brute_force_shapley(const PredictFn& f, const Vector& x, const Matrix& bg) {
  const Index d = x.size();
  auto value = [&](const std::vector<bool>& in) {
    Matrix rows = bg;
    for (Index j = 0; j < d; ++j)
      if (in[static_cast<std::size_t>(j)]) rows.col(j).setConstant(x(j));
    return f(rows).mean();
  };
  std::vector<Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), Index{0});
  Vector phi = Vector::Zero(d);
  double count = 0.0;
  do {
    std::vector<bool> in(static_cast<std::size_t>(d), false);
    double prev = value(in);
    for (Index j : order) {
      in[static_cast<std::size_t>(j)] = true;
      const double next = value(in);
      phi(j) += next - prev;
      prev = next;
    }
    count += 1.0;
  } while (std::next_permutation(order.begin(), order.end()));
  return phi / count;
}

TEST(ShapleyExact, ConstantModel) {
  Rng rng(1);
  const Attribution a = shapley_exact(constant_fn(4.2), testing::gaussian_vector(4, rng), testing::gaussian_matrix(5, 4, rng));
  EXPECT_EQ(a.values.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(a.baseline, 4.2);
}

TEST(ShapleyExact, HandEnumeratedTwoFeatures) {
  Vector w(2);
  w << 1, 2;
  const Attribution a = shapley_exact(linear_fn(w), Vector::Ones(2), Matrix::Zero(1, 2));
  EXPECT_NEAR(a.values(0), 1.0, 1e-15);
  EXPECT_NEAR(a.values(1), 2.0, 1e-15);
  EXPECT_EQ(a.baseline, 0.0);
}

TEST(ShapleyExact, LinearClosedForm) {
  Rng rng(2);
  const Vector w = testing::gaussian_vector(5, rng);
  const Matrix bg = testing::gaussian_matrix(30, 5, rng);
  const Vector x = testing::gaussian_vector(5, rng);
  const Attribution a = shapley_exact(linear_fn(w, 0.7), x, bg);
  const Vector expected = w.cwiseProduct(x - bg.colwise().mean().transpose());
  EXPECT_LT((a.values - expected).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(ShapleyExact, MatchesOrderAveragingOracle) {
  Rng rng(3);
  for (Index d = 1; d <= 6; ++d) {
    const Matrix bg = testing::gaussian_matrix(7, d, rng);
    const Vector x = testing::gaussian_vector(d, rng);
    const Attribution a = shapley_exact(nonlinear, x, bg);
    EXPECT_LT((a.values - brute_force_shapley(nonlinear, x, bg)).cwiseAbs().maxCoeff(), 1e-12) << d;
  }
}

TEST(ShapleyExact, EfficiencySymmetryAndNullPlayer) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix bg = testing::gaussian_matrix(10, 6, rng);
    const Vector x = testing::gaussian_vector(6, rng);
    const Attribution a = shapley_exact(nonlinear, x, bg);
    EXPECT_NEAR(a.baseline + a.values.sum(), nonlinear(x.transpose())(0), 1e-9);
    EXPECT_EQ(a.baseline, nonlinear(bg).mean());
  }
  // f = x1 + x2 with identical columns: equal shares. Feature 3 is never read.
  Matrix bg = testing::gaussian_matrix(8, 3, rng);
  bg.col(1) = bg.col(0);
  Vector x(3);
  x << 1.3, 1.3, -4.0;
  const PredictFn f = [](const Matrix& X) { return Vector(X.col(0) + X.col(1)); };
  const Attribution a = shapley_exact(f, x, bg);
  EXPECT_NEAR(a.values(0), a.values(1), 1e-9);
  EXPECT_LE(std::abs(a.values(2)), 1e-12);
}

TEST(ShapleyExact, FixtureRowsSatisfyEfficiency) {
  const Table t = load_csv(testing::data_dir() / "four_factors.csv");
  const std::vector<std::string> names{"EFG_O", "EFG_D", "TOR", "TORD", "ORB", "DRB", "FTR", "FTRD"};
  const Matrix X = t.to_matrix(names);
  const Vector y = t.column("W");
  const std::vector<FittedModel> models{
      FittedModel("ols", LinearModel{fit_ols(X, y), {}}, names),
      FittedModel("tree", fit_tree(X, y, TreeTask::regression, 4), names),
  };
  const Matrix bg = X.topRows(40);
  for (const FittedModel& m : models) {
    const PredictFn f = predictor(m);
    for (Index i = 100; i < 120; ++i) {
      const Vector x = X.row(i).transpose();
      const Attribution a = shapley_exact(f, x, bg, names);
      EXPECT_NEAR(a.baseline + a.values.sum(), f(X.row(i))(0), 1e-9);
      EXPECT_EQ(a.feature_names, names);
    }
  }
}

TEST(ShapleyExact, Limits) {
  EXPECT_THROW_CODE(shapley_exact(constant_fn(0), Vector::Zero(17), Matrix::Zero(1, 17)), too_many_features);
  EXPECT_THROW_CODE(shapley_exact(constant_fn(0), Vector::Zero(3), Matrix::Zero(0, 3)), insufficient_data);
}

TEST(ShapleySample, ConvergesToExact) {
  Rng rng(5);
  const Matrix bg = testing::gaussian_matrix(10, 6, rng);
  const Vector x = testing::gaussian_vector(6, rng);
  const Attribution exact = shapley_exact(nonlinear, x, bg);
  const Attribution est = shapley_sample(nonlinear, x, bg, 2000, 7);
  ASSERT_TRUE(est.uncertainty.has_value());
  for (Index j = 0; j < 6; ++j) {
    const double se = (*est.uncertainty)(j);
    EXPECT_LT(std::abs(est.values(j) - exact.values(j)), std::max(3.0 * se, 1e-12)) << j;
  }
}

TEST(ShapleySample, ConstantModelAndTelescoping) {
  Rng rng(6);
  const Matrix bg = testing::gaussian_matrix(6, 5, rng);
  const Vector x = testing::gaussian_vector(5, rng);
  EXPECT_EQ(shapley_sample(constant_fn(1.0), x, bg, 50, 1).values.cwiseAbs().maxCoeff(), 0.0);
  for (int n : {1, 2, 7, 100}) {
    const Attribution a = shapley_sample(nonlinear, x, bg, n, 3);
    EXPECT_NEAR(a.baseline + a.values.sum(), nonlinear(x.transpose())(0), 1e-9) << n;
  }
  const Attribution a = shapley_sample(nonlinear, x, bg, 40, 9), b = shapley_sample(nonlinear, x, bg, 40, 9);
  EXPECT_TRUE((a.values.array() == b.values.array()).all());
}

TEST(PermutationImportance, UnusedFeatureScoresZero) {
  Rng rng(7);
  const Matrix X = testing::gaussian_matrix(200, 3, rng);
  Vector w(3);
  w << 1.0, 0.0, -2.0;
  const PermImportance p = permutation_importance(linear_fn(w), X, X * w, ImportanceLoss::squared_prediction_shift, 5, 1);
  EXPECT_EQ(p.mean(1), 0.0);
  EXPECT_GT(p.mean(0), 0.0);
  EXPECT_EQ(p.repeats, 5);
}

TEST(PermutationImportance, IdentityModelShiftIsTwiceVariance) {
  Rng rng(8);
  Vector x = testing::gaussian_vector(10000, rng);
  x.array() -= x.mean();
  x /= std::sqrt(x.squaredNorm() / 10000.0);
  const Matrix X = x;
  const PredictFn f = [](const Matrix& M) { return Vector(M.col(0)); };
  const PermImportance p = permutation_importance(f, X, x, ImportanceLoss::squared_prediction_shift, 3, 2);
  EXPECT_NEAR(p.mean(0), 2.0, 0.1);
}

TEST(PermutationImportance, DuplicatedFeatureCaveat) {
  Rng rng(9);
  Matrix X(300, 2);
  X.col(0) = testing::gaussian_vector(300, rng);
  X.col(1) = X.col(0);
  const PredictFn f = [](const Matrix& M) { return Vector(M.col(0)); };
  const PermImportance p = permutation_importance(f, X, X.col(0), ImportanceLoss::squared_prediction_shift, 4, 3);
  EXPECT_EQ(p.mean(1), 0.0);
  EXPECT_GT(p.mean(0), 1.0);
}

TEST(PermutationImportance, ErrorIncreaseAndReproducibility) {
  Rng rng(10);
  const Matrix X = testing::gaussian_matrix(300, 3, rng);
  Vector w(3);
  w << 2.0, 0.0, 1.0;
  const Vector y = X * w;
  const PermImportance a = permutation_importance(linear_fn(w), X, y, ImportanceLoss::error_increase, 6, 11);
  const PermImportance b = permutation_importance(linear_fn(w), X, y, ImportanceLoss::error_increase, 6, 11);
  EXPECT_TRUE((a.mean.array() == b.mean.array()).all());
  EXPECT_TRUE((a.std.array() == b.std.array()).all());
  // Baseline error is zero here, so the increase is the mean squared shift.
  const PermImportance shift = permutation_importance(linear_fn(w), X, y, ImportanceLoss::squared_prediction_shift, 6, 11);
  EXPECT_LT((a.mean - shift.mean).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_GT(a.mean(0), a.mean(2));
  EXPECT_TRUE(a.mean.allFinite());
}

TEST(Pdp, AdditiveModelSlopeAndOffset) {
  Rng rng(11);
  const Matrix X = testing::gaussian_matrix(40, 3, rng);
  const PredictFn f = [](const Matrix& M) {
    return Vector(3.0 * M.col(1).array() + M.col(0).array().square() + M.col(2).array().cos());
  };
  const std::vector<double> grid{-1.0, 0.0, 0.5, 2.0};
  const PdpCurve c = pdp(f, X, 1, grid, "x1");
  const double g_mean = (X.col(0).array().square() + X.col(2).array().cos()).mean();
  for (std::size_t t = 0; t < grid.size(); ++t) EXPECT_NEAR(c.values[t], 3.0 * grid[t] + g_mean, 1e-12);
  EXPECT_EQ(c.n_background, 40);
  EXPECT_EQ(c.feature, "x1");
}

TEST(Pdp, IgnoredFeatureGivesExactlyConstantCurve) {
  Rng rng(12);
  const Matrix X = testing::gaussian_matrix(30, 3, rng);
  const PredictFn skip = [](const Matrix& M) { return Vector(M.col(0).array().exp() + M.col(2).array()); };
  const PdpCurve flat = pdp(skip, X, 1, QuantileGrid{10});
  ASSERT_GT(flat.values.size(), 1u);
  for (double v : flat.values) EXPECT_EQ(v, flat.values.front());
}

TEST(Pdp, TreeStepAtHalf) {
  Matrix X(4, 1);
  X << 0.0, 0.2, 0.8, 1.0;
  const Vector y = (Vector(4) << 0, 0, 1, 1).finished();
  const FittedModel tree("tree", fit_tree(X, y, TreeTask::regression, 1), {"x"});
  const PdpCurve c = pdp(predictor(tree), X, 0, std::vector<double>{0.0, 1.0});
  EXPECT_EQ(c.values, (std::vector<double>{0.0, 1.0}));
}

TEST(Pdp, QuantileGridIsStrictlyIncreasing) {
  Rng rng(13);
  Vector v = testing::gaussian_vector(100, rng);
  for (Index i = 0; i < 50; ++i) v(i) = 1.0;  // heavy ties collapse grid points
  const std::vector<double> g = quantile_grid(v, 20);
  ASSERT_FALSE(g.empty());
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_LT(g[i - 1], g[i]);
  EXPECT_LT(g.size(), 20u);
  EXPECT_EQ(g.front(), v.minCoeff());
  EXPECT_EQ(g.back(), v.maxCoeff());
}

TEST(FeatureEffect, ZeroWeightIsFlatAndMatchesPdpUpToConstant) {
  Rng rng(14);
  const Matrix X = testing::gaussian_matrix(80, 3, rng);
  Vector w(3);
  w << 0.0, 1.5, -0.4;
  const Vector y = X * w;
  const LinearFit fit = fit_ols(X, y);
  LinearFit zeroed = fit;
  zeroed.weights(0) = 0.0;
  for (double e : feature_effect(zeroed, X, 0).effect) EXPECT_EQ(e, 0.0);

  const FittedModel m("ols", LinearModel{fit, {}}, {"a", "b", "c"});
  const FeatureEffect fe = feature_effect(fit, X, 1);
  const PdpCurve c = pdp(predictor(m), X, 1, fe.grid);
  ASSERT_EQ(fe.effect.size(), c.values.size());
  const double offset = c.values[0] - fe.effect[0];
  for (std::size_t t = 0; t < c.values.size(); ++t) EXPECT_NEAR(c.values[t] - fe.effect[t], offset, 1e-9);
  EXPECT_EQ(fe.observed_x.size(), 80u);
}

TEST(FeatureEffect, SalaryPointsSlopeIsPositive) {
  const Table t = load_csv(testing::data_dir() / "salary.csv");
  const std::vector<std::string> features{"PV", "TFC", "TRC", "MPG", "PTS", "DRPM", "ORPM", "PN", "AGE"};
  const Matrix X = t.to_matrix(features);
  const FeatureEffect fe = feature_effect(fit_ols(X, t.column("SM")), X, 4);
  EXPECT_GT(fe.effect.back() - fe.effect.front(), 0.0);
  EXPECT_GT(fe.grid.back(), fe.grid.front());
}

TEST(Lime, RecoversGlobalLinearModel) {
  Rng rng(15);
  const Matrix X = testing::gaussian_matrix(200, 4, rng) * 3.0;
  Vector w(4);
  w << 0.8, -1.2, 0.05, 2.0;
  const SurrogateFit s = lime_local(linear_fn(w, 4.0), X.row(3).transpose(), feature_stats(X), 500, 0.0, 7);
  EXPECT_LT((s.weights - w).cwiseAbs().maxCoeff(), 1e-3);
  EXPECT_GT(s.fidelity, 0.999);
  EXPECT_LE(s.fidelity, 1.0);
  EXPECT_NEAR(s.kernel_width, default_kernel_width(4), 0.0);
  EXPECT_EQ(s.n_samples, 500);
}

TEST(Lime, ConstantModelHasUndefinedFidelity) {
  Rng rng(16);
  const Matrix X = testing::gaussian_matrix(50, 3, rng);
  const SurrogateFit s = lime_local(constant_fn(2.0), X.row(0).transpose(), feature_stats(X), 100, 0.0, 1);
  EXPECT_LT(s.weights.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_FALSE(s.fidelity_defined);
  EXPECT_EQ(s.fidelity, 0.0);
}

TEST(Lime, SameSeedIsBitIdenticalAndNonlinearFidelityBounded) {
  Rng rng(17);
  const Matrix X = testing::gaussian_matrix(60, 5, rng);
  const Vector x = X.row(1).transpose();
  const SurrogateFit a = lime_local(nonlinear, x, feature_stats(X), 300, 0.0, 4);
  const SurrogateFit b = lime_local(nonlinear, x, feature_stats(X), 300, 0.0, 4);
  EXPECT_TRUE((a.weights.array() == b.weights.array()).all());
  EXPECT_EQ(a.intercept, b.intercept);
  EXPECT_LE(a.fidelity, 1.0);
}

TEST(Lime, Preconditions) {
  const FeatureStats stats{Vector::Zero(3), Vector::Ones(3)};
  EXPECT_THROW_CODE(lime_local(constant_fn(0), Vector::Zero(3), stats, 4), parameter);
  // A width this small underflows every kernel weight.
  EXPECT_THROW_CODE(lime_local(constant_fn(0), Vector::Zero(3), stats, 50, 1e-200, 1), kernel_width);
}

}  // namespace
}  // namespace courtlens
