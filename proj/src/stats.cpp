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

#include "courtlens/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace courtlens {

AnovaResult one_way_anova(const std::vector<Vector>& groups) {
  if (groups.size() < 2) throw Error(ErrorCode::insufficient_data, "ANOVA needs at least two groups");
  AnovaResult r;
  double total = 0.0;
  Index N = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].size() < 2)
      throw Error(ErrorCode::insufficient_data, "group " + std::to_string(g) + " has fewer than 2 observations");
    r.group_sizes.push_back(groups[g].size());
    r.group_means.push_back(groups[g].mean());
    total += groups[g].sum();
    N += groups[g].size();
  }
  const double grand = total / static_cast<double>(N);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const double m = r.group_means[g];
    r.ssb += static_cast<double>(groups[g].size()) * (m - grand) * (m - grand);
    r.ssw += (groups[g].array() - m).square().sum();
    r.sst += (groups[g].array() - grand).square().sum();
  }
  const Index k = static_cast<Index>(groups.size());
  r.df_between = k - 1;
  r.df_within = N - k;
  const double msb = r.ssb / static_cast<double>(r.df_between);
  const double msw = r.ssw / static_cast<double>(r.df_within);
  if (msw > 0.0) r.f_stat = msb / msw;
  else r.f_stat = msb > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  r.p_value = f_survival(r.f_stat, static_cast<double>(r.df_between), static_cast<double>(r.df_within));
  return r;
}

namespace {

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_continued_fraction(double x, double a, double b) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-14;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 20000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < eps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double x, double a, double b) {
  if (!(a > 0.0 && b > 0.0)) throw Error(ErrorCode::parameter, "incomplete beta needs a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(x, a, b) / a;
  return 1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b;
}

double f_survival(double f, double df1, double df2) {
  if (!(df1 >= 1.0 && df2 >= 1.0)) throw Error(ErrorCode::parameter, "F degrees of freedom must be >= 1");
  if (std::isnan(f)) throw Error(ErrorCode::parameter, "F statistic is NaN");
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  const double x = df2 / (df2 + df1 * f);
  return std::clamp(incomplete_beta(x, 0.5 * df2, 0.5 * df1), 0.0, 1.0);
}

namespace {

struct GaussLegendre {
  std::array<double, 64> nodes{};
  std::array<double, 64> weights{};

  GaussLegendre() {
    constexpr int n = 64;
    for (int i = 0; i < n / 2; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      // Recompute the derivative at the converged node.
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double w = 2.0 / ((1.0 - x * x) * dp * dp);
      nodes[i] = -x;
      nodes[n - 1 - i] = x;
      weights[i] = weights[n - 1 - i] = w;
    }
  }

  template <typename F>
  double integrate(F&& f, double lo, double hi) const {
    const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(mid + half * nodes[i]);
    return s * half;
  }
};

const GaussLegendre& gauss_legendre() {
  static const GaussLegendre gl;
  return gl;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

// P(range of k standard normals <= w).
double range_cdf(double w, double k) {
  if (w <= 0.0) return 0.0;
  const auto& gl = gauss_legendre();
  const double v = k * gl.integrate(
                           [&](double z) {
                             const double inner = normal_cdf(z) - normal_cdf(z - w);
                             return inner > 0.0 ? normal_pdf(z) * std::pow(inner, k - 1.0) : 0.0;
                           },
                           -8.0, 8.0);
  return std::clamp(v, 0.0, 1.0);
}

}  // namespace

double studentized_range_survival(double q, double k, double df) {
  if (!(k >= 2.0 && df >= 1.0)) throw Error(ErrorCode::parameter, "studentized range needs k >= 2 and df >= 1");
  if (std::isnan(q)) throw Error(ErrorCode::parameter, "q is NaN");
  if (q <= 0.0) return 1.0;
  if (std::isinf(q)) return 0.0;
  // s = chi_df / sqrt(df) has density with log
  //   (df/2) log df - lgamma(df/2) - (df/2 - 1) log 2 + (df - 1) log s - df s^2 / 2.
  const double log_norm = 0.5 * df * std::log(df) - std::lgamma(0.5 * df) - (0.5 * df - 1.0) * std::log(2.0);
  const double spread = 1.0 / std::sqrt(2.0 * df);
  const double lo = std::max(0.0, 1.0 - 12.0 * spread);
  const double hi = 1.0 + 12.0 * spread;
  const auto& gl = gauss_legendre();
  const double cdf = gl.integrate(
      [&](double s) {
        if (s <= 0.0) return 0.0;
        const double dens = std::exp(log_norm + (df - 1.0) * std::log(s) - 0.5 * df * s * s);
        return dens * range_cdf(q * s, k);
      },
      lo, hi);
  return std::clamp(1.0 - cdf, 0.0, 1.0);
}

Index TukeyResult::rejections() const {
  return std::count_if(comparisons.begin(), comparisons.end(), [](const TukeyComparison& c) { return c.reject; });
}

TukeyResult tukey_hsd(const std::vector<Vector>& groups, double alpha, const std::vector<std::string>& group_names) {
  if (!(alpha > 0.0 && alpha <= 0.5)) throw Error(ErrorCode::parameter, "alpha must lie in (0, 0.5]");
  if (group_names.size() != groups.size()) throw Error(ErrorCode::dimension, "one name per group required");
  const AnovaResult a = one_way_anova(groups);
  const double msw = a.ssw / static_cast<double>(a.df_within);
  const double k = static_cast<double>(groups.size());
  TukeyResult out;
  out.alpha = alpha;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    for (std::size_t j = i + 1; j < groups.size(); ++j) {
      TukeyComparison c;
      c.group_a = group_names[i];
      c.group_b = group_names[j];
      c.mean_difference = a.group_means[j] - a.group_means[i];
      const double se = std::sqrt(0.5 * msw *
                                  (1.0 / static_cast<double>(a.group_sizes[i]) + 1.0 / static_cast<double>(a.group_sizes[j])));
      if (se > 0.0) c.q_statistic = std::abs(c.mean_difference) / se;
      else c.q_statistic = c.mean_difference != 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
      c.p_adjusted = studentized_range_survival(c.q_statistic, k, static_cast<double>(a.df_within));
      c.reject = c.p_adjusted < alpha;
      out.comparisons.push_back(c);
    }
  }
  return out;
}

CorrelationTest pearson_test(const Vector& x, const Vector& y) {
  if (x.size() != y.size()) throw Error(ErrorCode::dimension, "x and y differ in length");
  if (x.size() < 3) throw Error(ErrorCode::insufficient_data, "correlation test needs n >= 3");
  const Vector xc = x.array() - x.mean();
  const Vector yc = y.array() - y.mean();
  const double den = xc.norm() * yc.norm();
  if (den == 0.0) throw Error(ErrorCode::undefined_correlation, "constant input");
  CorrelationTest t;
  t.r = std::clamp(xc.dot(yc) / den, -1.0, 1.0);
  const double n = static_cast<double>(x.size());
  // Rounding leaves an exactly linear pair a few ulps short of |r| = 1.
  if (1.0 - std::abs(t.r) <= 8.0 * std::numeric_limits<double>::epsilon()) {
    t.r = std::copysign(1.0, t.r);
    t.p_value = 0.0;
  } else {
    const double tstat = t.r * std::sqrt((n - 2.0) / (1.0 - t.r * t.r));
    t.p_value = f_survival(tstat * tstat, 1.0, n - 2.0);
  }
  return t;
}

}  // namespace courtlens
