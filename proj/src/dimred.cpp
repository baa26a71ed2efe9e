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

#include "courtlens/dimred.hpp"

#include "courtlens/linalg.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <set>

namespace courtlens {

Projection pca_fit(const Matrix& X, Index k) {
  const Index n = X.rows();
  const Index d = X.cols();
  if (k < 1 || k > std::min(n, d))
    throw Error(ErrorCode::dimension, "k=" + std::to_string(k) + " outside [1, min(n, d)=" + std::to_string(std::min(n, d)) + "]");
  Projection p;
  p.column_means = column_means(X);
  const Matrix centered = X.rowwise() - p.column_means.transpose();
  const Matrix cov = centered.transpose() * centered / static_cast<double>(std::max<Index>(n - 1, 1));
  const auto eig = jacobi_eigen(cov);
  const Vector all = eig.values.cwiseMax(0.0);
  p.total_variance = cov.trace();
  const double sum = all.sum();
  p.components.resize(k, d);
  p.eigenvalues = all.head(k);
  p.explained_variance_ratio = sum > 0.0 ? Vector(all.head(k) / sum) : Vector(Vector::Zero(k));
  for (Index i = 0; i < k; ++i) {
    Vector v = eig.vectors.col(i);
    orient_by_largest(v);
    p.components.row(i) = v.transpose();
  }
  return p;
}

Matrix pca_transform(const Projection& p, const Matrix& X) {
  if (X.cols() != p.components.cols())
    throw Error(ErrorCode::dimension, "input has " + std::to_string(X.cols()) + " columns, projection expects " +
                                          std::to_string(p.components.cols()));
  return (X.rowwise() - p.column_means.transpose()) * p.components.transpose();
}

Matrix pca_inverse(const Projection& p, const Matrix& Z) {
  if (Z.cols() != p.components.rows())
    throw Error(ErrorCode::dimension, "scores have " + std::to_string(Z.cols()) + " columns, projection has " +
                                          std::to_string(p.components.rows()) + " components");
  return (Z * p.components).rowwise() + p.column_means.transpose();
}

namespace {

void validate_distances(const Matrix& D) {
  if (D.rows() != D.cols()) throw Error(ErrorCode::invalid_distance_matrix, "distance matrix is not square");
  const double tol = 1e-9 * std::max(1.0, D.cwiseAbs().maxCoeff());
  for (Index i = 0; i < D.rows(); ++i) {
    if (std::abs(D(i, i)) > tol) throw Error(ErrorCode::invalid_distance_matrix, "non-zero diagonal at " + std::to_string(i));
    for (Index j = 0; j < D.cols(); ++j) {
      if (!std::isfinite(D(i, j)) || D(i, j) < 0.0)
        throw Error(ErrorCode::invalid_distance_matrix, "negative or non-finite distance");
      if (std::abs(D(i, j) - D(j, i)) > tol) throw Error(ErrorCode::invalid_distance_matrix, "matrix is not symmetric");
    }
  }
}

}  // namespace

Embedding mds(const Matrix& D, Index k) {
  validate_distances(D);
  const Index n = D.rows();
  if (k < 1 || k > n) throw Error(ErrorCode::dimension, "k must lie in [1, n]");
  const Matrix B = -0.5 * D.array().square().matrix();
  // Double centering: B' = J B J with J = I - 11'/n.
  const Vector row_mean = B.rowwise().mean();
  const Vector col_mean = B.colwise().mean().transpose();
  const double grand = B.mean();
  Matrix centered = B;
  centered.colwise() -= row_mean;
  centered.rowwise() -= col_mean.transpose();
  centered.array() += grand;

  const auto eig = jacobi_eigen(centered);
  Embedding e;
  e.coords.resize(n, k);
  for (Index c = 0; c < k; ++c) {
    Vector v = eig.vectors.col(c);
    orient_by_largest(v);
    e.coords.col(c) = v * std::sqrt(std::max(eig.values(c), 0.0));
  }
  if (D.cwiseAbs().maxCoeff() > 0.0) e.stress = stress(D, e.coords);
  return e;
}

double stress(const Matrix& D, const Matrix& X) {
  if (D.rows() != D.cols() || D.rows() != X.rows())
    throw Error(ErrorCode::dimension, "distance matrix and configuration disagree on sample count");
  double num = 0.0, den = 0.0;
  const Index n = D.rows();
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double delta = (X.row(i) - X.row(j)).norm();
      num += (D(i, j) - delta) * (D(i, j) - delta);
      den += D(i, j) * D(i, j);
    }
  }
  if (den == 0.0) throw Error(ErrorCode::undefined_stress, "all input distances are zero");
  return std::sqrt(num / den);
}

Matrix geodesic_distances(const Matrix& X, Index n_neighbors) {
  const Index n = X.rows();
  if (n_neighbors < 1) throw Error(ErrorCode::parameter, "n_neighbors must be >= 1");
  const Matrix E = pairwise_distances(X);
  const Index kn = std::min(n_neighbors, n - 1);

  std::vector<std::map<Index, double>> adj(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    std::vector<Index> others;
    for (Index j = 0; j < n; ++j)
      if (j != i) others.push_back(j);
    std::stable_sort(others.begin(), others.end(), [&](Index a, Index b) { return E(i, a) < E(i, b); });
    for (Index t = 0; t < kn; ++t) {
      const Index j = others[static_cast<std::size_t>(t)];
      adj[i][j] = E(i, j);
      adj[j][i] = E(i, j);
    }
  }

  const double inf = std::numeric_limits<double>::infinity();
  Matrix G = Matrix::Constant(n, n, inf);
  using Item = std::pair<double, Index>;
  for (Index s = 0; s < n; ++s) {
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    G(s, s) = 0.0;
    heap.push({0.0, s});
    while (!heap.empty()) {
      auto [dist, u] = heap.top();
      heap.pop();
      if (dist > G(s, u)) continue;
      for (const auto& [v, w] : adj[u]) {
        const double nd = dist + w;
        if (nd < G(s, v)) {
          G(s, v) = nd;
          heap.push({nd, v});
        }
      }
    }
  }

  // Count components from reachability.
  std::vector<int> comp(static_cast<std::size_t>(n), -1);
  int n_comp = 0;
  for (Index i = 0; i < n; ++i) {
    if (comp[i] >= 0) continue;
    for (Index j = 0; j < n; ++j)
      if (std::isfinite(G(i, j))) comp[j] = n_comp;
    ++n_comp;
  }
  if (n_comp > 1)
    throw Error(ErrorCode::connectivity, "neighborhood graph has " + std::to_string(n_comp) + " connected components");
  // Dijkstra from each side can differ in the last bit; keep D exactly symmetric.
  return (G + G.transpose()) / 2.0;
}

Embedding isomap(const Matrix& X, Index k, Index n_neighbors) { return mds(geodesic_distances(X, n_neighbors), k); }

LdaModel lda_fit(const Matrix& X, const std::vector<int>& labels, Index k) {
  const Index n = X.rows();
  const Index d = X.cols();
  if (static_cast<Index>(labels.size()) != n) throw Error(ErrorCode::dimension, "one label per row required");
  std::map<int, std::vector<Index>> groups;
  for (Index i = 0; i < n; ++i) groups[labels[static_cast<std::size_t>(i)]].push_back(i);
  const Index n_classes = static_cast<Index>(groups.size());
  if (n_classes < 2) throw Error(ErrorCode::degenerate_labels, "LDA needs at least two classes");
  if (k < 1 || k > std::min(n_classes - 1, d))
    throw Error(ErrorCode::dimension, "k must lie in [1, min(classes - 1, d)]");

  LdaModel m;
  m.mean = column_means(X);
  m.within_scatter = Matrix::Zero(d, d);
  m.between_scatter = Matrix::Zero(d, d);
  for (const auto& [label, rows] : groups) {
    Matrix G(static_cast<Index>(rows.size()), d);
    for (std::size_t r = 0; r < rows.size(); ++r) G.row(static_cast<Index>(r)) = X.row(rows[r]);
    const Vector mu = column_means(G);
    const Matrix c = G.rowwise() - mu.transpose();
    m.within_scatter += c.transpose() * c;
    const Vector diff = mu - m.mean;
    m.between_scatter += static_cast<double>(rows.size()) * diff * diff.transpose();
  }

  const double tr = m.within_scatter.trace();
  const double ridge = 1e-9 * (tr > 0.0 ? tr / static_cast<double>(d) : 1.0);
  const Matrix sw = m.within_scatter + ridge * Matrix::Identity(d, d);
  Eigen::LLT<Matrix> llt(sw);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::degenerate_labels, "within-class scatter is not positive definite");
  const Matrix L = llt.matrixL();
  // Symmetric form of S_w^{-1} S_b: L^{-1} S_b L^{-T}.
  const Matrix left = L.triangularView<Eigen::Lower>().solve(m.between_scatter);
  const Matrix M = L.triangularView<Eigen::Lower>().solve(left.transpose());
  const auto eig = jacobi_eigen(M);

  m.directions.resize(k, d);
  m.eigenvalues.resize(k);
  for (Index c = 0; c < k; ++c) {
    Vector w = L.transpose().triangularView<Eigen::Upper>().solve(eig.vectors.col(c));
    w.normalize();
    orient_by_largest(w);
    m.directions.row(c) = w.transpose();
    m.eigenvalues(c) = eig.values(c);
  }
  return m;
}

Matrix lda_transform(const LdaModel& m, const Matrix& X) {
  if (X.cols() != m.directions.cols()) throw Error(ErrorCode::dimension, "column count does not match LDA model");
  return (X.rowwise() - m.mean.transpose()) * m.directions.transpose();
}

double rayleigh_quotient(const LdaModel& m, const Vector& w) {
  const double den = w.dot(m.within_scatter * w);
  const double num = w.dot(m.between_scatter * w);
  return den > 0.0 ? num / den : std::numeric_limits<double>::infinity();
}

TsneConfig tsne_defaults(Index n, std::uint64_t seed) {
  TsneConfig cfg;
  cfg.perplexity = std::min(30.0, static_cast<double>(n - 2) / 3.0);
  cfg.seed = seed;
  return cfg;
}

TsneAffinities tsne_affinities(const Matrix& X, double perplexity) {
  const Index n = X.rows();
  Matrix D2(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) D2(i, j) = (X.row(i) - X.row(j)).squaredNorm();

  TsneAffinities out;
  out.beta.assign(static_cast<std::size_t>(n), 1.0);
  out.perplexity.assign(static_cast<std::size_t>(n), 0.0);
  Matrix cond = Matrix::Zero(n, n);
  const double target = std::log(perplexity);

  for (Index i = 0; i < n; ++i) {
    double dmin = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < n; ++j)
      if (j != i) dmin = std::min(dmin, D2(i, j));

    double beta = 1.0;
    double lo = 0.0, hi = std::numeric_limits<double>::infinity();
    double entropy = 0.0;
    Vector row = Vector::Zero(n);
    for (int it = 0; it < 200; ++it) {
      double sum = 0.0, weighted = 0.0;
      for (Index j = 0; j < n; ++j) {
        if (j == i) continue;
        const double shifted = D2(i, j) - dmin;
        row(j) = std::exp(-beta * shifted);
        sum += row(j);
        weighted += shifted * row(j);
      }
      entropy = std::log(sum) + beta * weighted / sum;
      row /= sum;
      const double diff = entropy - target;
      if (std::abs(diff) < 1e-12) break;
      if (diff > 0.0) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
    }
    cond.row(i) = row.transpose();
    out.beta[static_cast<std::size_t>(i)] = beta;
    out.perplexity[static_cast<std::size_t>(i)] = std::exp(entropy);
  }
  out.P = (cond + cond.transpose()) / (2.0 * static_cast<double>(n));
  return out;
}

namespace {

// Student-t kernel numerators 1 / (1 + |y_i - y_j|^2), zero diagonal.
Matrix kernel_numerators(const Matrix& Y) {
  const Index n = Y.rows();
  Matrix num = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) num(i, j) = num(j, i) = 1.0 / (1.0 + (Y.row(i) - Y.row(j)).squaredNorm());
  return num;
}

double kl_from_numerators(const Matrix& P, const Matrix& num) {
  const double z = num.sum();
  double c = 0.0;
  for (Index i = 0; i < P.rows(); ++i)
    for (Index j = 0; j < P.cols(); ++j)
      if (i != j && P(i, j) > 0.0) c += P(i, j) * std::log(P(i, j) / std::max(num(i, j) / z, 1e-300));
  return c;
}

}  // namespace

double tsne_objective(const Matrix& P, const Matrix& Y) { return kl_from_numerators(P, kernel_numerators(Y)); }

Embedding tsne(const Matrix& X, const TsneConfig& cfg) {
  const Index n = X.rows();
  if (n < 4) throw Error(ErrorCode::config, "t-SNE needs at least 4 samples");
  if (!(cfg.perplexity > 1.0)) throw Error(ErrorCode::config, "perplexity must exceed 1");
  if (cfg.perplexity >= static_cast<double>(n - 1))
    throw Error(ErrorCode::config, "perplexity " + std::to_string(cfg.perplexity) + " must be below n - 1 = " + std::to_string(n - 1));
  if (cfg.iterations < 1 || cfg.out_dim < 1) throw Error(ErrorCode::config, "iterations and out_dim must be >= 1");

  const Matrix P = tsne_affinities(X, cfg.perplexity).P;
  Rng rng(cfg.seed);
  Matrix Y(n, cfg.out_dim);
  for (Index i = 0; i < n; ++i)
    for (Index c = 0; c < cfg.out_dim; ++c) Y(i, c) = rng.normal(0.0, cfg.init_sd);
  Matrix velocity = Matrix::Zero(n, cfg.out_dim);

  Embedding e;
  e.objective_trace.reserve(static_cast<std::size_t>(cfg.iterations) + 1);
  Matrix num = kernel_numerators(Y);
  e.objective_trace.push_back(kl_from_numerators(P, num));

  for (int it = 0; it < cfg.iterations; ++it) {
    const double exaggeration = it < cfg.exaggeration_iters ? cfg.exaggeration : 1.0;
    const double momentum = it < cfg.momentum_switch_iter ? cfg.momentum : cfg.final_momentum;
    const double z = num.sum();
    Matrix grad = Matrix::Zero(n, cfg.out_dim);
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) {
        if (i == j) continue;
        const double mult = (exaggeration * P(i, j) - num(i, j) / z) * num(i, j);
        grad.row(i) += mult * (Y.row(i) - Y.row(j));
      }
    }
    grad *= 4.0;
    velocity = momentum * velocity - cfg.learning_rate * grad;
    Y += velocity;
    Y.rowwise() -= Y.colwise().mean();
    num = kernel_numerators(Y);
    e.objective_trace.push_back(kl_from_numerators(P, num));
  }
  e.coords = Y;
  return e;
}

}  // namespace courtlens
