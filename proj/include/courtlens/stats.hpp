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

#ifndef COURTLENS_STATS_HPP
#define COURTLENS_STATS_HPP

#include "courtlens/common.hpp"

#include <string>
#include <vector>

namespace courtlens {

struct AnovaResult {
  double sst = 0.0;
  double ssb = 0.0;
  double ssw = 0.0;
  Index df_between = 0;
  Index df_within = 0;
  double f_stat = 0.0;
  double p_value = 1.0;
  std::vector<double> group_means;
  std::vector<Index> group_sizes;
};

AnovaResult one_way_anova(const std::vector<Vector>& groups);

/// Upper tail of the F(df1, df2) distribution.
double f_survival(double f, double df1, double df2);

/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double x, double a, double b);

/// P(Q > q) for the studentized range of k means with df error degrees of
/// freedom, by nested 64-point Gauss-Legendre quadrature.
double studentized_range_survival(double q, double k, double df);

struct TukeyComparison {
  std::string group_a;
  std::string group_b;
  double mean_difference = 0.0;  // mean(b) - mean(a)
  double q_statistic = 0.0;
  double p_adjusted = 1.0;
  bool reject = false;
};

struct TukeyResult {
  double alpha = 0.05;
  std::vector<TukeyComparison> comparisons;  // (i, j) with i < j
  Index rejections() const;
};

/// Tukey-Kramer HSD for possibly unequal group sizes.
TukeyResult tukey_hsd(const std::vector<Vector>& groups, double alpha, const std::vector<std::string>& group_names);

struct CorrelationTest {
  double r = 0.0;
  double p_value = 1.0;
};

CorrelationTest pearson_test(const Vector& x, const Vector& y);

}  // namespace courtlens

#endif  // COURTLENS_STATS_HPP
