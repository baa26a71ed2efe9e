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

#ifndef COURTLENS_REGRESS_HPP
#define COURTLENS_REGRESS_HPP

#include "courtlens/attribution.hpp"
#include "courtlens/common.hpp"

#include <optional>
#include <string>
#include <vector>

namespace courtlens {

// ---------------------------------------------------------------------------
// Linear family
// ---------------------------------------------------------------------------

struct LinearFit {
  Vector weights;
  double intercept = 0.0;
  std::optional<Vector> weight_stderr;
  double residual_variance = 0.0;
  std::vector<std::string> feature_names;

  bool jitter_applied = false;  // normal equations needed a ridge jitter
  bool converged = true;
  int iterations = 0;
  std::vector<double> objective_trace;  // per sweep / IRLS iteration
  double scale = 0.0;                   // Huber joint scale estimate
  double dispersion = 0.0;              // GLM dispersion estimate
};

enum class Link { identity, log };

struct GlmSpec {
  double power = 0.0;
  double dispersion = 1.0;
  Link link = Link::identity;
};

/// Tweedie defaults: power 1.5 with log link.
inline GlmSpec tweedie_defaults() { return {1.5, 1.0, Link::log}; }

LinearFit fit_ols(const Matrix& X, const Vector& y);
/// Minimizes sum_i w_i (y_i - b - x_i'beta)^2 + alpha |beta|^2 (intercept unpenalized).
LinearFit fit_weighted_ridge(const Matrix& X, const Vector& y, const Vector& w, double alpha);
LinearFit fit_ridge(const Matrix& X, const Vector& y, double alpha);

/// Coordinate descent on (1/2n)|y - b - Xw|^2 + alpha |w|_1 with features
/// standardized internally. Weights are returned in the original units.
LinearFit fit_lasso(const Matrix& X, const Vector& y, double alpha, int max_sweeps = 10000, double tol = 1e-8);
/// Smallest alpha at which every lasso weight is exactly zero.
double lasso_alpha_max(const Matrix& X, const Vector& y);

LinearFit fit_huber(const Matrix& X, const Vector& y, double epsilon = 1.35, double alpha = 1e-4);

LinearFit fit_tweedie(const Matrix& X, const Vector& y, const GlmSpec& spec, double alpha = 0.0);
double tweedie_deviance(const Vector& y, const Vector& mu, double power);

Vector predict_linear(const LinearFit& fit, const GlmSpec& spec, const Matrix& X);

// ---------------------------------------------------------------------------
// CART
// ---------------------------------------------------------------------------

enum class TreeTask { regression, classification };

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;                // regression mean or majority class
  std::vector<double> distribution;  // class proportions (classification)
  int depth = 0;
  Index n_samples = 0;
  double impurity_decrease = 0.0;

  bool is_leaf() const { return feature < 0; }
};

struct TreeModel {
  TreeTask task = TreeTask::regression;
  int n_classes = 0;
  Index n_features = 0;
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  const TreeNode& leaf_for(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
  int depth() const;
  Index n_leaves() const;
};

TreeModel fit_tree(const Matrix& X, const Vector& y, TreeTask task, int max_depth, Index min_leaf = 1);
/// Total impurity decrease per feature, normalized to sum to one.
Vector tree_feature_importance(const TreeModel& tree);

// ---------------------------------------------------------------------------
// MLP
// ---------------------------------------------------------------------------

enum class OutputKind { softmax, identity };

struct MlpSpec {
  std::vector<Index> layer_sizes;     // input, hidden..., output
  std::vector<double> dropout_rates;  // one per hidden layer
  OutputKind output = OutputKind::softmax;
  std::uint64_t seed = 0;
  int epochs = 100;
  Index batch_size = 32;
  double learning_rate = 0.05;
};

/// The role classifier architecture: 46 -> 40 -> 30 -> 5 with dropout 0.5.
MlpSpec role_classifier_spec(std::uint64_t seed);
/// One hidden layer of 16 with identity output.
MlpSpec regression_mlp_spec(Index n_inputs, std::uint64_t seed);

struct DenseLayer {
  Matrix weights;  // out x in
  Vector bias;
};

class Mlp {
 public:
  Mlp() = default;
  /// He-uniform initialization: U(-sqrt(6 / fan_in), sqrt(6 / fan_in)), zero bias.
  explicit Mlp(const MlpSpec& spec);

  const MlpSpec& spec() const { return spec_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  /// Inference (dropout disabled). Rows are samples; softmax rows sum to one.
  Matrix predict(const Matrix& X) const;

  /// Mean loss over the rows of X and its gradient w.r.t. all parameters
  /// (flattened in parameters() order). Dropout is applied when rng is given.
  double loss_and_gradient(const Matrix& X, const Vector& y, Vector* gradient, Rng* dropout_rng = nullptr) const;
  double loss(const Matrix& X, const Vector& y) const { return loss_and_gradient(X, y, nullptr); }

  Vector parameters() const;
  void set_parameters(const Vector& theta);
  Index n_parameters() const;

 private:
  MlpSpec spec_;
  std::vector<DenseLayer> layers_;
};

struct TrainReport {
  std::vector<double> train_loss;
  std::vector<double> validation_loss;
  std::vector<double> train_accuracy;
  std::vector<double> validation_accuracy;
};

struct MlpFit {
  Mlp network;
  TrainReport report;
};

struct Validation {
  Matrix X;
  Vector y;
};

/// Plain mini-batch SGD with seeded shuffling. Classification targets are
/// class indices stored as doubles.
MlpFit mlp_train(const Matrix& X, const Vector& y, const MlpSpec& spec,
                 const std::optional<Validation>& validation = std::nullopt);

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

double r2_score(const Vector& y, const Vector& yhat);
double accuracy(const Vector& y, const Vector& yhat_classes);

/// beta_j * std(x_j) / std(y) with 95% intervals scaled the same way.
Attribution standardized_coefficients(const LinearFit& fit, const Matrix& X, const Vector& y);

}  // namespace courtlens

#endif  // COURTLENS_REGRESS_HPP
