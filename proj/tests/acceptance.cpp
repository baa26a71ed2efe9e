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

// Acceptance harness: one PASS/FAIL line per criterion. Exits nonzero when
// any criterion fails.

#include "courtlens/dimred.hpp"
#include "courtlens/explain.hpp"
#include "courtlens/fixtures.hpp"
#include "courtlens/linalg.hpp"
#include "courtlens/model.hpp"
#include "courtlens/pipeline.hpp"
#include "courtlens/regress.hpp"
#include "courtlens/stats.hpp"
#include "courtlens/tabular.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace courtlens;
namespace fs = std::filesystem;
using nlohmann::json;

const fs::path kData = COURTLENS_DATA_DIR;
const fs::path kScratch = fs::path(COURTLENS_SCRATCH_DIR) / "acceptance";

const std::vector<std::string> kFourFactors{"EFG_O", "EFG_D", "TOR", "TORD", "ORB", "DRB", "FTR", "FTRD"};
const std::vector<std::string> kRoles{"PG", "SG", "SF", "PF", "C"};

Matrix gaussian(Index n, Index d, Rng& rng) {
  Matrix m(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) m(i, j) = rng.normal();
  return m;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

fs::path fresh(const std::string& name) {
  const fs::path p = kScratch / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

PipelineConfig bundled(const std::string& name, const fs::path& out) {
  PipelineConfig cfg = load_config(kData / (name + ".cfg"));
  apply_overrides(cfg, std::nullopt, out);
  return cfg;
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [failed]");
  }
};

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

// ----- 1 ---------------------------------------------------------------------

Outcome shapley_correctness() {
  Outcome o;
  Rng rng(101);
  Vector w(5);
  w << 0.7, -1.3, 2.0, 0.05, -0.4;
  const PredictFn linear = [&](const Matrix& X) { return Vector((X * w).array() + 1.5); };
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Matrix bg = gaussian(25, 5, rng);
    const Vector x = gaussian(1, 5, rng).transpose();
    const Vector expected = w.cwiseProduct(x - bg.colwise().mean().transpose());
    worst = std::max(worst, (shapley_exact(linear, x, bg).values - expected).cwiseAbs().maxCoeff());
  }
  o.check(worst < 1e-9, "closed-form gap " + fmt("%.1e", worst));

  const Table t = load_csv(kData / "four_factors.csv");
  const Matrix X = t.to_matrix(kFourFactors);
  const Vector y = t.column("W");
  MlpSpec spec = regression_mlp_spec(8, 1);
  spec.epochs = 20;
  const Vector mu = X.colwise().mean().transpose();
  const Vector sd = ((X.rowwise() - mu.transpose()).array().square().colwise().mean().sqrt()).transpose();
  const Matrix Z = (X.rowwise() - mu.transpose()).array().rowwise() / sd.transpose().array();
  const std::vector<std::pair<FittedModel, Matrix>> models{
      {FittedModel("ols", LinearModel{fit_ols(X, y), {}}, kFourFactors), X},
      {FittedModel("tree", fit_tree(X, y, TreeTask::regression, 4), kFourFactors), X},
      {FittedModel("mlp", mlp_train(Z, y, spec).network, kFourFactors), Z},
  };
  double gap = 0.0;
  for (const auto& [model, data] : models) {
    const PredictFn f = predictor(model);
    const Matrix bg = data.topRows(20);
    const Vector pred = f(data);
    for (Index i = 0; i < data.rows(); ++i) {
      const Attribution a = shapley_exact(f, data.row(i).transpose(), bg);
      gap = std::max(gap, std::abs(a.baseline + a.values.sum() - pred(i)));
    }
  }
  o.check(gap < 1e-9, "efficiency gap " + fmt("%.1e", gap) + " over 3 x 200 rows");
  return o;
}

// ----- 2 ---------------------------------------------------------------------

Outcome shapley_sampling() {
  Outcome o;
  Rng rng(202);
  const Matrix X = gaussian(300, 6, rng);
  Vector y(300);
  for (Index i = 0; i < 300; ++i) y(i) = X(i, 0) * X(i, 1) + std::abs(X(i, 2)) + 0.5 * X(i, 3) - X(i, 4) + 0.3 * rng.normal();
  const FittedModel tree("tree", fit_tree(X, y, TreeTask::regression, 6), {"a", "b", "c", "d", "e", "f"});
  const PredictFn f = predictor(tree);
  int within = 0;
  for (int t = 0; t < 50; ++t) {
    const Matrix bg = gaussian(20, 6, rng);
    const Vector x = gaussian(1, 6, rng).transpose();
    const Attribution exact = shapley_exact(f, x, bg);
    const Attribution est = shapley_sample(f, x, bg, 2000, 1000 + static_cast<std::uint64_t>(t));
    bool ok = true;
    for (Index j = 0; j < 6; ++j) ok &= std::abs(est.values(j) - exact.values(j)) <= 3.0 * (*est.uncertainty)(j) + 1e-12;
    within += ok;
  }
  o.check(within >= 48, std::to_string(within) + "/50 trials within 3 se on every feature");
  return o;
}

// ----- 3 ---------------------------------------------------------------------

Outcome anova_oracle() {
  Outcome o;
  Vector a(3), b(3), c(3);
  a << 1, 2, 3;
  b << 2, 3, 4;
  c << 3, 4, 5;
  const AnovaResult r = one_way_anova({a, b, c});
  o.check(r.ssb == 6.0 && r.ssw == 6.0 && r.f_stat == 3.0,
          "SSB " + fmt("%.17g", r.ssb) + ", SSW " + fmt("%.17g", r.ssw) + ", F " + fmt("%.17g", r.f_stat));
  o.check(std::abs(r.p_value - 0.125) < 1e-10, "p " + fmt("%.12f", r.p_value));
  Rng rng(303);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    std::vector<Vector> groups;
    const Index k = 2 + static_cast<Index>(rng.below(5));
    for (Index g = 0; g < k; ++g) {
      Vector v = gaussian(2 + static_cast<Index>(rng.below(20)), 1, rng).col(0);
      v.array() += rng.uniform(-5.0, 5.0);
      groups.push_back(v);
    }
    const AnovaResult s = one_way_anova(groups);
    worst = std::max(worst, std::abs(s.sst - s.ssb - s.ssw) / s.sst);
  }
  o.check(worst <= 1e-8, "partition rel. error " + fmt("%.1e", worst) + " over 1000 instances");
  return o;
}

// ----- 4 ---------------------------------------------------------------------

Outcome tukey_fwer() {
  Outcome o;
  Rng rng(404);
  int any = 0;
  for (int t = 0; t < 2000; ++t) {
    std::vector<Vector> groups;
    for (int g = 0; g < 5; ++g) groups.push_back(gaussian(20, 1, rng).col(0));
    any += tukey_hsd(groups, 0.05, kRoles).rejections() > 0;
  }
  const double fwer = any / 2000.0;
  o.check(fwer >= 0.03 && fwer <= 0.07, "null FWER " + fmt("%.4f", fwer));

  const Table t = load_csv(kData / "roles.csv");
  const auto labels = t.labels("ROLE");
  const Vector drpm = t.column("DRPM");
  std::vector<std::vector<double>> buckets(5);
  for (std::size_t i = 0; i < labels.size(); ++i)
    buckets[static_cast<std::size_t>(std::find(kRoles.begin(), kRoles.end(), labels[i]) - kRoles.begin())].push_back(drpm(static_cast<Index>(i)));
  std::vector<Vector> groups;
  for (const auto& bkt : buckets) groups.push_back(Eigen::Map<const Vector>(bkt.data(), static_cast<Index>(bkt.size())));
  const TukeyResult r = tukey_hsd(groups, 0.05, kRoles);
  o.check(r.comparisons.size() == 10 && r.rejections() == 7,
          std::to_string(r.comparisons.size()) + " records, " + std::to_string(r.rejections()) + " rejections");
  return o;
}

// ----- 5 ---------------------------------------------------------------------

Outcome dimensionality_reduction() {
  Outcome o;
  Rng rng(505);
  double worst_stress = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Index n = 3 + static_cast<Index>(rng.below(18));
    const Index r = 1 + static_cast<Index>(rng.below(std::min<std::uint64_t>(3, static_cast<std::uint64_t>(n - 1))));
    const Matrix P = gaussian(n, r, rng) * 4.0;
    const Matrix D = pairwise_distances(P);
    for (Index k = r; k <= std::min<Index>(n, r + 2); ++k) worst_stress = std::max(worst_stress, *mds(D, k).stress);
  }
  o.check(worst_stress < 1e-6, "max MDS stress " + fmt("%.1e", worst_stress));

  double iso_gap = 0.0;
  for (int t = 0; t < 20; ++t) {
    const Matrix X = gaussian(15, 3, rng);
    const Matrix a = pairwise_distances(isomap(X, 2, 14).coords);
    const Matrix b = pairwise_distances(mds(pairwise_distances(X), 2).coords);
    iso_gap = std::max(iso_gap, (a - b).cwiseAbs().maxCoeff());
  }
  o.check(iso_gap < 1e-9, "ISOMAP vs MDS " + fmt("%.1e", iso_gap));

  double recon = 0.0;
  for (int t = 0; t < 20; ++t) {
    const Matrix X = gaussian(40, 7, rng) * 10.0;
    const Projection p = pca_fit(X, 7);
    recon = std::max(recon, (pca_inverse(p, pca_transform(p, X)) - X).cwiseAbs().maxCoeff());
  }
  o.check(recon < 1e-8, "PCA reconstruction " + fmt("%.1e", recon));

  Matrix C(20, 4);
  for (Index i = 0; i < 20; ++i) {
    C.row(i) = gaussian(1, 4, rng);
    if (i >= 10) C(i, 0) += 100.0;
  }
  const TsneConfig cfg = tsne_defaults(20, 5);
  const TsneAffinities aff = tsne_affinities(C, cfg.perplexity);
  double calib = 0.0;
  for (double p : aff.perplexity) calib = std::max(calib, std::abs(p - cfg.perplexity));
  const Embedding e = tsne(C, cfg);
  o.check(e.objective_trace.back() < e.objective_trace.front(),
          "KL " + fmt("%.4f", e.objective_trace.front()) + " -> " + fmt("%.4f", e.objective_trace.back()));
  o.check(calib < 1e-5, "perplexity error " + fmt("%.1e", calib));
  return o;
}

// ----- 6 ---------------------------------------------------------------------

Outcome regression_family() {
  Outcome o;
  Rng rng(606);
  const Matrix X = gaussian(50, 4, rng);
  Vector w(4);
  w << 1.5, -2.0, 0.25, 3.0;
  const Vector y = (X * w).array() + 0.75;
  const LinearFit ols = fit_ols(X, y);
  const double r2 = r2_score(y, predict_linear(ols, {}, X));
  const double coef_err = std::max((ols.weights - w).cwiseAbs().maxCoeff(), std::abs(ols.intercept - 0.75));
  o.check(r2 == 1.0 || std::abs(r2 - 1.0) < 1e-12, "noiseless R2 " + fmt("%.15f", r2));
  o.check(coef_err < 1e-8, "coef error " + fmt("%.1e", coef_err));

  const Table t = load_csv(kData / "four_factors.csv");
  const Matrix F = t.to_matrix(kFourFactors);
  const Vector W = t.column("W");
  const double n0 = fit_ridge(F, W, 0.0).weights.norm(), n5 = fit_ridge(F, W, 0.5).weights.norm();
  o.check(n5 < n0, "ridge |w| " + fmt("%.4f", n0) + " -> " + fmt("%.4f", n5));
  const double amax = lasso_alpha_max(F, W);
  const bool killed = (fit_lasso(F, W, amax).weights.array() == 0.0).all();
  const bool alive = fit_lasso(F, W, 0.99 * amax).weights.cwiseAbs().maxCoeff() > 0.0;
  o.check(killed && alive, "lasso kill at alpha_max " + fmt("%.4f", amax));

  Matrix L(20, 1);
  Vector ly(20);
  for (int i = 0; i < 20; ++i) L(i, 0) = ly(i) = i + 1;
  ly(19) += 1000.0;
  const double e_ols = std::abs(fit_ols(L, ly).weights(0) - 1.0), e_hub = std::abs(fit_huber(L, ly).weights(0) - 1.0);
  o.check(e_ols >= 5.0 * e_hub, "slope error OLS " + fmt("%.3g", e_ols) + " vs Huber " + fmt("%.3g", e_hub));

  const Vector noisy = y + 0.5 * gaussian(50, 1, rng).col(0);
  const LinearFit a = fit_ols(X, noisy), b = fit_tweedie(X, noisy, {0.0, 1.0, Link::identity});
  const double tw = std::max((a.weights - b.weights).cwiseAbs().maxCoeff(), std::abs(a.intercept - b.intercept));
  o.check(tw < 1e-8, "Tweedie(0) vs OLS " + fmt("%.1e", tw));
  return o;
}

// ----- 7 ---------------------------------------------------------------------

Outcome mlp() {
  Outcome o;
  Rng rng(707);
  MlpSpec spec;
  spec.layer_sizes = {4, 3, 2};
  spec.dropout_rates = {0.0};
  spec.seed = 7;
  const Mlp net(spec);
  const Matrix X = gaussian(8, 4, rng);
  Vector y(8);
  for (Index i = 0; i < 8; ++i) y(i) = static_cast<double>(i % 2);
  Vector g;
  net.loss_and_gradient(X, y, &g);
  Mlp probe = net;
  const Vector theta = net.parameters();
  double worst = 0.0;
  for (Index k = 0; k < theta.size(); ++k) {
    Vector th = theta;
    th(k) += 1e-5;
    probe.set_parameters(th);
    const double up = probe.loss(X, y);
    th(k) -= 2e-5;
    probe.set_parameters(th);
    const double numeric = (up - probe.loss(X, y)) / 2e-5;
    worst = std::max(worst, std::abs(numeric - g(k)) / std::max(1e-6, std::abs(numeric) + std::abs(g(k))));
  }
  o.check(worst < 1e-4, "gradient rel. error " + fmt("%.1e", worst));

  const Table roles = load_csv(kData / "roles.csv");
  const std::vector<std::string> features = roles.numeric_names();
  const auto [train, test] = train_test_split(roles, {0.2, 1});
  const ScaledTable scaled = min_max_scale(train, features);
  auto labels = [](const Table& part) {
    const auto names = part.labels("ROLE");
    Vector out(static_cast<Index>(names.size()));
    for (std::size_t i = 0; i < names.size(); ++i)
      out(static_cast<Index>(i)) = static_cast<double>(std::find(kRoles.begin(), kRoles.end(), names[i]) - kRoles.begin());
    return out;
  };
  const MlpFit fit = mlp_train(scaled.table.to_matrix(features), labels(train), role_classifier_spec(1),
                               Validation{apply_scaling(test, scaled.params).to_matrix(features), labels(test)});
  const double acc = fit.report.validation_accuracy.back();
  o.check(acc >= 0.90 && fit.report.train_loss.size() <= 200,
          "46-40-30-5 validation accuracy " + fmt("%.3f", acc) + " after " + std::to_string(fit.report.train_loss.size()) + " epochs");
  return o;
}

// ----- 8 ---------------------------------------------------------------------

Outcome four_factors_pipeline() {
  Outcome o;
  const fs::path out = fresh("four_factors");
  run(bundled("four_factors", out));
  const json report = read_json(out / "report.json");
  const double r2 = report.at("metrics").at("test_r2");
  o.check(r2 >= 0.75 && r2 <= 0.87, "test R2 " + fmt("%.4f", r2));
  const json& weights = report.at("fit").at("summary").at("weights");
  const std::vector<int> signs{1, -1, -1, 1, 1, -1, 1, -1};
  int matched = 0;
  for (std::size_t j = 0; j < kFourFactors.size(); ++j)
    matched += (weights.at(kFourFactors[j]).get<double>() > 0 ? 1 : -1) == signs[j];
  o.check(matched == 8, std::to_string(matched) + "/8 signs");
  return o;
}

// ----- 9 ---------------------------------------------------------------------

Outcome salary_pipeline() {
  Outcome o;
  const fs::path out = fresh("salary");
  run(bundled("salary", out));
  const json report = read_json(out / "report.json");
  const json& cmp = report.at("fit").at("poly_compare");
  const double r1 = cmp.at(0).at("test_r2"), r2 = cmp.at(1).at("test_r2");
  o.check(r2 - r1 >= 0.10, "R2 degree 1 " + fmt("%.4f", r1) + " -> degree 2 " + fmt("%.4f", r2));
  const json& sc = report.at("explain").at("weights");
  const auto names = sc.at("feature_names").get<std::vector<std::string>>();
  const auto values = sc.at("values").get<std::vector<double>>();
  const std::vector<std::pair<std::string, double>> expected{
      {"PTS", 0.7180}, {"AGE", 0.4837}, {"DRPM", 0.3847}, {"ORPM", -0.0165}, {"TFC", -0.0036}};
  double worst = 0.0;
  std::string listing;
  for (const auto& [name, value] : expected) {
    const auto j = static_cast<std::size_t>(std::find(names.begin(), names.end(), name) - names.begin());
    if (j >= names.size()) return {false, "missing " + name};
    worst = std::max(worst, std::abs(values[j] - value));
    listing += " " + name + "=" + fmt("%.4f", values[j]);
  }
  o.check(worst <= 0.05, "standardized" + listing + " (max dev " + fmt("%.4f", worst) + ")");
  return o;
}

// ----- 10 --------------------------------------------------------------------

Outcome determinism() {
  Outcome o;
  for (const std::string name : {"four_factors", "salary", "roles"}) {
    const fs::path a = fresh(name + "_det_a"), b = fresh(name + "_det_b");
    run(bundled(name, a));
    run(bundled(name, b));
    int compared = 0;
    bool same = true;
    for (const auto& e : fs::directory_iterator(a)) {
      const std::string file = e.path().filename().string();
      if (file != "report.json" && e.path().extension() != ".svg") continue;
      ++compared;
      same &= fs::exists(b / file) && slurp(a / file) == slurp(b / file);
    }
    o.check(same && compared >= 2, name + ": " + std::to_string(compared) + " files identical");
  }
  return o;
}

struct Criterion {
  int id;
  std::string name;
  double limit_seconds;  // 0: no stated limit
  std::function<Outcome()> body;
};

}  // namespace

int main() {
  fs::create_directories(kScratch);
  const std::vector<Criterion> criteria{
      {1, "Shapley correctness", 5.0, shapley_correctness},
      {2, "Shapley sampling consistency", 60.0, shapley_sampling},
      {3, "ANOVA oracle", 0.0, anova_oracle},
      {4, "Tukey FWER", 120.0, tukey_fwer},
      {5, "Dimensionality reduction", 0.0, dimensionality_reduction},
      {6, "Regression family", 0.0, regression_family},
      {7, "MLP", 180.0, mlp},
      {8, "Four-factors pipeline", 0.0, four_factors_pipeline},
      {9, "Salary pipeline", 0.0, salary_pipeline},
      {10, "Determinism", 0.0, determinism},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.body();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_seconds > 0.0) outcome.check(secs < c.limit_seconds, "runtime limit " + fmt("%.0f s", c.limit_seconds));
    failures += !outcome.pass;
    std::printf("%s criterion %d (%s): %s [%.2f s]\n", outcome.pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                outcome.detail.c_str(), secs);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
