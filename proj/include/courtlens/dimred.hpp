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

#ifndef COURTLENS_DIMRED_HPP
#define COURTLENS_DIMRED_HPP

#include "courtlens/common.hpp"

#include <optional>
#include <vector>

namespace courtlens {

/// Fitted PCA. Components are stored as rows (k x d), orthonormal.
struct Projection {
  Matrix components;
  Vector eigenvalues;
  Vector explained_variance_ratio;
  Vector column_means;
  double total_variance = 0.0;
};

Projection pca_fit(const Matrix& X, Index k);
Matrix pca_transform(const Projection& p, const Matrix& X);
Matrix pca_inverse(const Projection& p, const Matrix& Z);

struct Embedding {
  Matrix coords;
  std::optional<double> stress;
  std::vector<double> objective_trace;
};

/// Classical (Torgerson) MDS on a precomputed distance matrix.
Embedding mds(const Matrix& D, Index k);

/// Normalized stress: sqrt(sum_{i!=j}(d_ij - delta_ij)^2 / sum_{i!=j} d_ij^2).
double stress(const Matrix& D, const Matrix& X);

Embedding isomap(const Matrix& X, Index k, Index n_neighbors);

/// Shortest-path distances over the symmetrized Euclidean kNN graph.
Matrix geodesic_distances(const Matrix& X, Index n_neighbors);

struct LdaModel {
  Matrix directions;  // k x d, unit rows
  Vector eigenvalues;  // generalized Rayleigh quotients, descending
  Matrix within_scatter;
  Matrix between_scatter;
  Vector mean;
};

LdaModel lda_fit(const Matrix& X, const std::vector<int>& labels, Index k);
Matrix lda_transform(const LdaModel& m, const Matrix& X);
/// w' S_b w / w' S_w w using the unstabilized scatter matrices.
double rayleigh_quotient(const LdaModel& m, const Vector& w);

struct TsneConfig {
  double perplexity = 30.0;
  Index out_dim = 2;
  int iterations = 500;
  double learning_rate = 100.0;
  double momentum = 0.5;
  double final_momentum = 0.8;
  int momentum_switch_iter = 250;
  double exaggeration = 4.0;
  int exaggeration_iters = 100;
  double init_sd = 1e-4;
  std::uint64_t seed = 0;
};

/// Default t-SNE settings with perplexity capped at (n - 2) / 3.
TsneConfig tsne_defaults(Index n, std::uint64_t seed);

struct TsneAffinities {
  Matrix P;                            // symmetric joint probabilities
  std::vector<double> beta;            // per-point precision 1 / (2 sigma^2)
  std::vector<double> perplexity;      // achieved 2^H per point
};

TsneAffinities tsne_affinities(const Matrix& X, double perplexity);
/// KL(P || Q) for a low-dimensional configuration Y.
double tsne_objective(const Matrix& P, const Matrix& Y);
Embedding tsne(const Matrix& X, const TsneConfig& cfg);

}  // namespace courtlens

#endif  // COURTLENS_DIMRED_HPP
