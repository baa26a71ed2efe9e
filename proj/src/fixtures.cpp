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

#include "courtlens/json_io.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace courtlens {

namespace {

struct Column {
  const char* name;
  double mean;
  double sd;
};

// Rounds to a fixed number of decimals; dividing by the power of ten gives
// the double nearest the decimal value, so the CSV stays short.
double round_to(double v, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(v * scale) / scale;
}

Table numeric_table(const std::vector<std::string>& names, const Matrix& values) {
  std::vector<ColumnSpec> spec;
  for (const auto& n : names) spec.push_back({n, ColumnKind::numeric, true});
  std::vector<std::vector<Cell>> rows(static_cast<std::size_t>(values.rows()));
  for (Index i = 0; i < values.rows(); ++i)
    for (Index j = 0; j < values.cols(); ++j) rows[static_cast<std::size_t>(i)].emplace_back(values(i, j));
  return Table(std::move(spec), std::move(rows));
}

// W = mean_W + sd_W * (b'z / c + sqrt(1 - R2) e) with c = sqrt(b'b / R2), so
// the signal share of Var(W) is exactly R2 in the population.
Fixture four_factors(Index n, std::uint64_t seed) {
  static const Column cols[] = {{"EFG_O", 50.0, 3.0}, {"EFG_D", 50.0, 3.0}, {"TOR", 18.5, 2.0},
                                {"TORD", 18.5, 2.2},  {"ORB", 29.0, 4.0},   {"DRB", 29.0, 3.0},
                                {"FTR", 33.0, 5.0},   {"FTRD", 33.0, 6.0}};
  static const double b[] = {0.6, -0.9, -0.8, 0.7, 0.4, -0.3, 0.25, -0.2};
  const Column target{"W", 18.0, 5.0};
  constexpr Index d = 8;

  double bb = 0.0;
  for (double v : b) bb += v * v;
  const double c = std::sqrt(bb / kFourFactorsR2);
  const double noise = std::sqrt(1.0 - kFourFactorsR2);

  Rng rng(seed);
  Matrix values(n, d + 1);
  for (Index i = 0; i < n; ++i) {
    double signal = 0.0;
    for (Index j = 0; j < d; ++j) {
      const double z = rng.normal();
      signal += b[j] * z;
      values(i, j) = round_to(cols[j].mean + cols[j].sd * z, 3);
    }
    // Win totals cannot be negative; the floor binds about once in 6000 rows.
    values(i, d) = std::max(0.0, round_to(target.mean + target.sd * (signal / c + noise * rng.normal()), 3));
  }

  std::vector<std::string> names;
  nlohmann::json std_w = nlohmann::json::object(), raw_w = nlohmann::json::object();
  double intercept = target.mean;
  for (Index j = 0; j < d; ++j) {
    names.emplace_back(cols[j].name);
    std_w[cols[j].name] = b[j] / c;
    const double raw = target.sd * b[j] / (c * cols[j].sd);
    raw_w[cols[j].name] = raw;
    intercept -= raw * cols[j].mean;
  }
  names.emplace_back(target.name);

  Fixture f{"four_factors", numeric_table(names, values), nlohmann::json::object()};
  f.truth = {{"target", "W"},
             {"features", std::vector<std::string>(names.begin(), names.end() - 1)},
             {"standardized_weights", std_w},
             {"raw_weights", raw_w},
             {"intercept", intercept},
             {"sign_pattern", {1, -1, -1, 1, 1, -1, 1, -1}},
             {"population_r2", kFourFactorsR2},
             {"noise_sd", target.sd * noise},
             {"calibration",
              "features are independent N(mean, sd); W = mean_W + sd_W * (sum_j b_j z_j / c + sqrt(1 - R2) e) "
              "with c = sqrt(sum_j b_j^2 / R2), so Var(signal) / Var(W) = R2 exactly; W is floored at 0"}};
  return f;
}

// Salary: correlated standardized box statistics, a linear part with the
// published standardized weights and a centered AGE^2 term. E[z_a^2 z_k] = 0
// for jointly Gaussian z, so the quadratic part is invisible to a linear fit
// and the linear standardized coefficients stay equal to b.
Fixture salary(Index n, std::uint64_t seed) {
  // Continuous features in generation order.
  static const Column cols[] = {{"PV", 0.0, 2.0},   {"TFC", 2.0, 0.8},  {"TRC", 1.5, 0.6},
                                {"MPG", 24.0, 8.0}, {"PTS", 11.0, 6.0}, {"DRPM", 0.0, 1.5},
                                {"ORPM", 0.0, 2.0}, {"AGE", 27.0, 4.0}};
  static const double b[] = {0.0017, -0.0036, 0.0045, 0.05, 0.7180, 0.3847, -0.0165, 0.4837};
  constexpr Index d = 8;
  constexpr Index kMpg = 3, kPts = 4, kDrpm = 5, kAge = 7;
  constexpr double b_pn = 0.02;
  constexpr double quadratic_share = 0.15;
  const Column target{"SM", 8.0, 6.0};

  Matrix R = Matrix::Identity(d, d);
  R(kPts, kAge) = R(kAge, kPts) = -0.3;
  R(kAge, kDrpm) = R(kDrpm, kAge) = -0.2;
  R(kMpg, kPts) = R(kPts, kMpg) = 0.5;
  const Matrix L = R.llt().matrixL();

  Vector bv(d);
  for (Index j = 0; j < d; ++j) bv(j) = b[j];
  const double linear_share = bv.dot(R * bv) + b_pn * b_pn;
  const double noise_share = 1.0 - linear_share - quadratic_share;
  if (noise_share <= 0.0) throw Error(ErrorCode::parameter, "salary fixture parameters leave no noise budget");

  Rng rng(seed);
  // Output column order: PV,TFC,TRC,MPG,PTS,DRPM,ORPM,PN,AGE,SM
  const std::vector<std::string> names{"PV", "TFC", "TRC", "MPG", "PTS", "DRPM", "ORPM", "PN", "AGE", "SM"};
  static const Index out_col[] = {0, 1, 2, 3, 4, 5, 6, 8};
  Matrix values(n, 10);
  for (Index i = 0; i < n; ++i) {
    Vector e(d);
    for (Index j = 0; j < d; ++j) e(j) = rng.normal();
    const Vector z = L * e;
    const double pn = static_cast<double>(i % 5 + 1);
    const double z_pn = (pn - 3.0) / std::sqrt(2.0);
    const double s = bv.dot(z) + b_pn * z_pn + std::sqrt(quadratic_share / 2.0) * (z(kAge) * z(kAge) - 1.0) +
                     std::sqrt(noise_share) * rng.normal();
    for (Index j = 0; j < d; ++j) values(i, out_col[j]) = round_to(cols[j].mean + cols[j].sd * z(j), 4);
    values(i, 7) = pn;
    values(i, 9) = round_to(target.mean + target.sd * s, 4);
  }

  nlohmann::json std_w = nlohmann::json::object();
  for (Index j = 0; j < d; ++j) std_w[cols[j].name] = b[j];
  std_w["PN"] = b_pn;
  Fixture f{"salary", numeric_table(names, values), nlohmann::json::object()};
  f.truth = {{"target", "SM"},
             {"features", std::vector<std::string>(names.begin(), names.end() - 1)},
             {"standardized_weights", std_w},
             {"correlations", {{"PTS~AGE", -0.3}, {"AGE~DRPM", -0.2}, {"MPG~PTS", 0.5}}},
             {"linear_r2", linear_share},
             {"full_r2", linear_share + quadratic_share},
             {"quadratic_term", "sqrt(q / 2) * (z_AGE^2 - 1)"},
             {"quadratic_share", quadratic_share},
             {"noise_share", noise_share},
             {"calibration",
              "SM = mean + sd * (b'z + b_PN z_PN + sqrt(q/2)(z_AGE^2 - 1) + sqrt(1 - L - q) e) with L = b'Rb + b_PN^2; "
              "Var of the standardized part is L + q + (1 - L - q) = 1, PN is uniform on 1..5 with "
              "z_PN = (PN - 3) / sqrt(2)"}};
  return f;
}

// Roles: 45 Gaussian box statistics with class-dependent means plus a DRPM
// column whose per-role sample moments are fixed exactly. Each role's DRPM
// values are standardized to sample sd 1, so MSW = 1 and the Tukey q between
// roles a and b is |m_a - m_b| / sqrt((1/n_a + 1/n_b) / 2).
Fixture roles(Index n, std::uint64_t seed) {
  static const char* role_names[] = {"PG", "SG", "SF", "PF", "C"};
  constexpr Index k = 5, n_stats = 45;
  constexpr double separation = 0.6;
  // DRPM role means in units of 1/sqrt(n_role): q(PF,SF) = q(C,PF) = 2.5,
  // q(C,SF) = 5, and every guard-forward pair is at least 10.
  static const double drpm_units[] = {0.0, 0.0, 10.0, 12.5, 15.0};
  // Role switchers: a point guard with a center's profile and a shooting
  // guard who plays like a small forward.
  static const std::pair<Index, Index> switchers[] = {{0, 4}, {1, 2}};

  Rng rng(seed);
  Matrix means(k, n_stats);
  for (Index c = 0; c < k; ++c)
    for (Index j = 0; j < n_stats; ++j) means(c, j) = separation * rng.normal();

  Matrix values(n, n_stats + 1);
  std::vector<Index> role(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    role[static_cast<std::size_t>(i)] = i % k;
    Index profile = i % k;
    for (const auto& [row, as] : switchers)
      if (row == i) profile = as;
    for (Index j = 0; j < n_stats; ++j) values(i, j) = round_to(means(profile, j) + rng.normal(), 4);
  }

  for (Index c = 0; c < k; ++c) {
    std::vector<Index> members;
    for (Index i = 0; i < n; ++i)
      if (role[static_cast<std::size_t>(i)] == c) members.push_back(i);
    const auto m = static_cast<Index>(members.size());
    Vector z(m);
    for (Index t = 0; t < m; ++t) z(t) = rng.normal();
    z.array() -= z.mean();
    z /= std::sqrt(z.squaredNorm() / static_cast<double>(m - 1));
    const double mu = drpm_units[c] / std::sqrt(static_cast<double>(m));
    for (Index t = 0; t < m; ++t) values(members[static_cast<std::size_t>(t)], n_stats) = mu + z(t);
  }

  std::vector<ColumnSpec> spec;
  std::vector<std::string> features;
  for (Index j = 0; j < n_stats; ++j) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "S%02d", static_cast<int>(j + 1));
    features.emplace_back(buf);
  }
  features.emplace_back("DRPM");
  for (const auto& name : features) spec.push_back({name, ColumnKind::numeric, true});
  spec.push_back({"ROLE", ColumnKind::categorical, false});
  std::vector<std::vector<Cell>> rows(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    auto& r = rows[static_cast<std::size_t>(i)];
    for (Index j = 0; j <= n_stats; ++j) r.emplace_back(values(i, j));
    r.emplace_back(std::string(role_names[role[static_cast<std::size_t>(i)]]));
  }

  nlohmann::json sw = nlohmann::json::array();
  for (const auto& [row, as] : switchers)
    sw.push_back({{"row", row}, {"label", role_names[row % k]}, {"profile", role_names[as]}});
  nlohmann::json drpm = nlohmann::json::object();
  for (Index c = 0; c < k; ++c) drpm[role_names[c]] = drpm_units[c];
  Fixture f{"roles", Table(std::move(spec), std::move(rows)), nlohmann::json::object()};
  f.truth = {{"target", "ROLE"},
             {"features", features},
             {"classes", {"PG", "SG", "SF", "PF", "C"}},
             {"class_of_row", "row i has role i mod 5"},
             {"class_mean_separation", separation},
             {"class_means", to_json_rows(means)},
             {"role_switchers", sw},
             {"drpm_mean_units", drpm},
             {"drpm_tukey_rejections", kRoleDrpmRejections},
             {"calibration",
              "per role, DRPM = units / sqrt(n_role) + z with z standardized to sample mean 0 and sd 1, "
              "so MSW = 1 and pairwise Tukey q equals the unit difference for balanced roles"}};
  return f;
}

}  // namespace

Fixture make_fixture(const std::string& kind, Index n, std::uint64_t seed) {
  if (n < 50) throw Error(ErrorCode::usage, "fixtures need n >= 50");
  Fixture f;
  if (kind == "four_factors") f = four_factors(n, seed);
  else if (kind == "salary") f = salary(n, seed);
  else if (kind == "roles") f = roles(n, seed);
  else throw Error(ErrorCode::usage, "unknown fixture kind '" + kind + "' (four_factors, roles, salary)");
  f.truth["kind"] = kind;
  f.truth["n"] = n;
  f.truth["seed"] = seed;
  return f;
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p.replace_extension(".truth.json");
  return p;
}

void write_fixture(const Fixture& f, const std::filesystem::path& csv_path) {
  write_csv(f.table, csv_path);
  write_json(f.truth, sidecar_path(csv_path));
}

}  // namespace courtlens
