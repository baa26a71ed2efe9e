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

#include "courtlens/regress.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace courtlens {

namespace {

void check_xy(const Matrix& X, const Vector& y) {
  if (X.rows() != y.size())
    throw Error(ErrorCode::dimension, "X has " + std::to_string(X.rows()) + " rows but y has " + std::to_string(y.size()));
  if (X.rows() == 0) throw Error(ErrorCode::insufficient_data, "no training rows");
}

struct WeightedSolution {
  Vector beta;
  double intercept = 0.0;
  Matrix gram_inverse;  // (Xc' W Xc + alpha I)^{-1} in original units
  bool jitter = false;
};

// Minimizes sum_i w_i (y_i - b - x_i'beta)^2 + alpha |beta|^2. The intercept
// is never penalized. Columns are centered and norm-equilibrated before the
// Cholesky solve; a 1e-12 * trace jitter is added when the system is singular.
WeightedSolution solve_weighted(const Matrix& X, const Vector& y, const Vector& w, double alpha) {
  const Index d = X.cols();
  const double wsum = w.sum();
  const Vector xbar = (X.transpose() * w) / wsum;
  const double ybar = w.dot(y) / wsum;
  const Matrix Xc = X.rowwise() - xbar.transpose();
  const Vector yc = y.array() - ybar;

  Vector scale(d);
  for (Index j = 0; j < d; ++j) {
    const double nrm = std::sqrt((Xc.col(j).array().square() * w.array()).sum());
    scale(j) = nrm > 0.0 ? 1.0 / nrm : 1.0;
  }
  const Matrix Xs = Xc * scale.asDiagonal();
  Matrix A = Xs.transpose() * w.asDiagonal() * Xs;
  A.diagonal() += alpha * scale.array().square().matrix();
  const Vector rhs = Xs.transpose() * (w.array() * yc.array()).matrix();

  WeightedSolution out;
  Eigen::LLT<Matrix> llt(A);
  if (d > 0 && (llt.info() != Eigen::Success || llt.rcond() < 1e-13)) {
    const double tr = A.trace();
    A.diagonal().array() += 1e-12 * (tr > 0.0 ? tr : 1.0);
    llt.compute(A);
    out.jitter = true;
  }
  const Vector gamma = d > 0 ? Vector(llt.solve(rhs)) : Vector();
  out.beta = scale.asDiagonal() * gamma;
  out.intercept = ybar - xbar.dot(out.beta);
  if (d > 0) out.gram_inverse = scale.asDiagonal() * llt.solve(Matrix::Identity(d, d)) * scale.asDiagonal();
  return out;
}

Vector residuals(const Matrix& X, const Vector& y, const Vector& beta, double intercept) {
  return (y - X * beta).array() - intercept;
}

double soft_threshold(double rho, double alpha) {
  if (rho > alpha) return rho - alpha;
  if (rho < -alpha) return rho + alpha;
  return 0.0;
}

}  // namespace

LinearFit fit_ols(const Matrix& X, const Vector& y) {
  check_xy(X, y);
  const Index n = X.rows(), d = X.cols();
  if (n <= d + 1)
    throw Error(ErrorCode::underdetermined, std::to_string(n) + " rows cannot determine " + std::to_string(d) + " weights and an intercept");
  const auto sol = solve_weighted(X, y, Vector::Ones(n), 0.0);
  LinearFit fit;
  fit.weights = sol.beta;
  fit.intercept = sol.intercept;
  fit.jitter_applied = sol.jitter;
  const Vector r = residuals(X, y, fit.weights, fit.intercept);
  fit.residual_variance = r.squaredNorm() / static_cast<double>(n - d - 1);
  fit.weight_stderr = (fit.residual_variance * sol.gram_inverse.diagonal().cwiseMax(0.0)).cwiseSqrt();
  return fit;
}

LinearFit fit_weighted_ridge(const Matrix& X, const Vector& y, const Vector& w, double alpha) {
  check_xy(X, y);
  if (w.size() != y.size()) throw Error(ErrorCode::dimension, "one weight per row required");
  if (!(alpha >= 0.0)) throw Error(ErrorCode::parameter, "alpha must be >= 0");
  if (!(w.minCoeff() >= 0.0) || !(w.sum() > 0.0)) throw Error(ErrorCode::parameter, "row weights must be >= 0 with a positive sum");
  const auto sol = solve_weighted(X, y, w, alpha);
  LinearFit fit;
  fit.weights = sol.beta;
  fit.intercept = sol.intercept;
  fit.jitter_applied = sol.jitter;
  const Vector r = residuals(X, y, fit.weights, fit.intercept);
  fit.residual_variance = (w.array() * r.array().square()).sum() / w.sum();
  return fit;
}

LinearFit fit_ridge(const Matrix& X, const Vector& y, double alpha) {
  check_xy(X, y);
  if (!(alpha >= 0.0)) throw Error(ErrorCode::parameter, "ridge alpha must be >= 0");
  const Index n = X.rows(), d = X.cols();
  const auto sol = solve_weighted(X, y, Vector::Ones(n), alpha);
  LinearFit fit;
  fit.weights = sol.beta;
  fit.intercept = sol.intercept;
  fit.jitter_applied = sol.jitter;
  const Vector r = residuals(X, y, fit.weights, fit.intercept);
  fit.residual_variance = r.squaredNorm() / static_cast<double>(n > d + 1 ? n - d - 1 : n);
  return fit;
}

namespace {

struct Standardized {
  Matrix Z;
  Vector mean;
  Vector sd;
};

Standardized standardize(const Matrix& X) {
  Standardized s;
  const double n = static_cast<double>(X.rows());
  s.mean = X.colwise().mean().transpose();
  s.Z = X.rowwise() - s.mean.transpose();
  s.sd.resize(X.cols());
  for (Index j = 0; j < X.cols(); ++j) {
    s.sd(j) = std::sqrt(s.Z.col(j).squaredNorm() / n);
    if (s.sd(j) > 0.0) s.Z.col(j) /= s.sd(j);
  }
  return s;
}

}  // namespace

double lasso_alpha_max(const Matrix& X, const Vector& y) {
  check_xy(X, y);
  const auto s = standardize(X);
  const Vector yc = y.array() - y.mean();
  double m = 0.0;
  for (Index j = 0; j < X.cols(); ++j)
    if (s.sd(j) > 0.0) m = std::max(m, std::abs(s.Z.col(j).dot(yc)) / static_cast<double>(X.rows()));
  return m;
}

LinearFit fit_lasso(const Matrix& X, const Vector& y, double alpha, int max_sweeps, double tol) {
  check_xy(X, y);
  if (!(alpha >= 0.0)) throw Error(ErrorCode::parameter, "lasso alpha must be >= 0");
  const Index n = X.rows(), d = X.cols();
  // Without a penalty the problem is least squares; solve it exactly.
  if (alpha == 0.0 && n > d + 1) {
    LinearFit fit = fit_ols(X, y);
    fit.weight_stderr.reset();
    return fit;
  }
  const auto s = standardize(X);
  const double ybar = y.mean();
  Vector r = y.array() - ybar;
  Vector b = Vector::Zero(d);
  const double nn = static_cast<double>(n);

  auto objective = [&] { return r.squaredNorm() / (2.0 * nn) + alpha * b.lpNorm<1>(); };

  LinearFit fit;
  fit.converged = false;
  fit.objective_trace.push_back(objective());
  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (Index j = 0; j < d; ++j) {
      if (s.sd(j) == 0.0) continue;
      const auto zj = s.Z.col(j);
      const double rho = zj.dot(r) / nn + b(j);  // |z_j|^2 / n == 1
      const double updated = soft_threshold(rho, alpha);
      const double delta = updated - b(j);
      if (delta != 0.0) {
        r -= delta * zj;
        b(j) = updated;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    fit.objective_trace.push_back(objective());
    if (max_change < tol) {
      fit.converged = true;
      ++sweep;
      break;
    }
  }
  fit.iterations = sweep;
  fit.weights.resize(d);
  for (Index j = 0; j < d; ++j) fit.weights(j) = s.sd(j) > 0.0 ? b(j) / s.sd(j) : 0.0;
  fit.intercept = ybar - s.mean.dot(fit.weights);
  const Vector res = residuals(X, y, fit.weights, fit.intercept);
  fit.residual_variance = res.squaredNorm() / static_cast<double>(n > d + 1 ? n - d - 1 : n);
  return fit;
}

LinearFit fit_huber(const Matrix& X, const Vector& y, double epsilon, double alpha) {
  check_xy(X, y);
  if (!(epsilon > 0.0)) throw Error(ErrorCode::parameter, "huber epsilon must be > 0");
  if (!(alpha >= 0.0)) throw Error(ErrorCode::parameter, "huber alpha must be >= 0");
  const Index n = X.rows(), d = X.cols();
  const double nn = static_cast<double>(n);
  const double eps2 = epsilon * epsilon;
  const double sigma_floor = 1e-12 * (1.0 + std::sqrt((y.array() - y.mean()).square().mean()));

  auto huber = [&](double z) { return std::abs(z) <= epsilon ? z * z : 2.0 * epsilon * std::abs(z) - eps2; };
  auto objective = [&](const Vector& r, double sigma, const Vector& beta) {
    double total = 0.0;
    for (Index i = 0; i < n; ++i) total += sigma * (1.0 + huber(r(i) / sigma));
    return total + alpha * beta.squaredNorm();
  };
  // The concomitant scale minimizes sum sigma (1 + H(r / sigma)); its
  // stationarity condition n = sum min(z^2, eps^2) is monotone in sigma.
  auto best_scale = [&](const Vector& r) {
    auto g = [&](double sigma) {
      double acc = 0.0;
      for (Index i = 0; i < n; ++i) acc += std::min(r(i) * r(i) / (sigma * sigma), eps2);
      return nn - acc;
    };
    const double rms = std::sqrt(r.squaredNorm() / nn);
    if (rms == 0.0 || g(sigma_floor) >= 0.0) return sigma_floor;
    double lo = sigma_floor, hi = 2.0 * rms;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (g(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };

  auto sol = solve_weighted(X, y, Vector::Ones(n), alpha);
  Vector beta = sol.beta;
  double intercept = sol.intercept;
  LinearFit fit;
  fit.converged = false;
  double sigma = sigma_floor;
  int it = 0;
  for (; it < 1000; ++it) {
    const Vector r = residuals(X, y, beta, intercept);
    sigma = best_scale(r);
    fit.objective_trace.push_back(objective(r, sigma, beta));
    Vector w(n);
    for (Index i = 0; i < n; ++i) {
      const double a = std::abs(r(i));
      w(i) = a <= epsilon * sigma ? 1.0 : epsilon * sigma / a;
    }
    // Majorizer of the Huber term: sum w_i r_i^2 / sigma + alpha |beta|^2.
    sol = solve_weighted(X, y, w, alpha * sigma);
    double change = std::abs(sol.intercept - intercept);
    if (d > 0) change = std::max(change, (sol.beta - beta).cwiseAbs().maxCoeff());
    beta = sol.beta;
    intercept = sol.intercept;
    fit.jitter_applied = fit.jitter_applied || sol.jitter;
    if (change < 1e-8) {
      fit.converged = true;
      ++it;
      break;
    }
  }
  const Vector r = residuals(X, y, beta, intercept);
  fit.objective_trace.push_back(objective(r, best_scale(r), beta));
  fit.iterations = it;
  fit.weights = beta;
  fit.intercept = intercept;
  fit.scale = sigma;
  fit.residual_variance = sigma * sigma;
  return fit;
}

double tweedie_deviance(const Vector& y, const Vector& mu, double p) {
  double dev = 0.0;
  for (Index i = 0; i < y.size(); ++i) {
    const double yi = y(i), m = mu(i);
    double u;
    if (p == 0.0) {
      u = (yi - m) * (yi - m);
    } else if (p == 1.0) {
      u = 2.0 * ((yi > 0.0 ? yi * std::log(yi / m) : 0.0) - (yi - m));
    } else if (p == 2.0) {
      u = 2.0 * (std::log(m / yi) + yi / m - 1.0);
    } else {
      u = 2.0 * (std::pow(std::max(yi, 0.0), 2.0 - p) / ((1.0 - p) * (2.0 - p)) - yi * std::pow(m, 1.0 - p) / (1.0 - p) +
                 std::pow(m, 2.0 - p) / (2.0 - p));
    }
    dev += u;
  }
  return dev;
}

Vector predict_linear(const LinearFit& fit, const GlmSpec& spec, const Matrix& X) {
  if (X.cols() != fit.weights.size())
    throw Error(ErrorCode::dimension, "model expects " + std::to_string(fit.weights.size()) + " features, got " + std::to_string(X.cols()));
  Vector eta = (X * fit.weights).array() + fit.intercept;
  if (spec.link == Link::log) return eta.array().exp();
  return eta;
}

LinearFit fit_tweedie(const Matrix& X, const Vector& y, const GlmSpec& spec, double alpha) {
  check_xy(X, y);
  const double p = spec.power;
  if (!(p == 0.0 || (p >= 1.0 && p <= 2.0))) throw Error(ErrorCode::parameter, "tweedie power must be 0 or lie in [1, 2]");
  if (!(spec.dispersion > 0.0)) throw Error(ErrorCode::parameter, "dispersion must be > 0");
  if (!(alpha >= 0.0)) throw Error(ErrorCode::parameter, "tweedie alpha must be >= 0");
  if (spec.link == Link::identity && p != 0.0) throw Error(ErrorCode::parameter, "identity link requires power 0");
  if (p >= 1.0) {
    if (y.minCoeff() < 0.0) throw Error(ErrorCode::domain, "negative response with tweedie power >= 1");
    if (p == 2.0 && y.minCoeff() <= 0.0) throw Error(ErrorCode::domain, "gamma deviance needs a strictly positive response");
  }
  const Index n = X.rows(), d = X.cols();
  const double nn = static_cast<double>(n);
  const bool log_link = spec.link == Link::log;
  if (log_link && !(y.mean() > 0.0)) throw Error(ErrorCode::domain, "log link needs a positive mean response");

  LinearFit fit;
  fit.weights = Vector::Zero(d);
  fit.intercept = log_link ? std::log(y.mean()) : y.mean();
  fit.converged = false;
  const GlmSpec link_only{p, 1.0, spec.link};
  auto deviance_of = [&](const LinearFit& f) { return tweedie_deviance(y, predict_linear(f, link_only, X), p); };
  double dev = deviance_of(fit);
  fit.objective_trace.push_back(dev);

  int it = 0;
  for (; it < 200; ++it) {
    const Vector eta = (X * fit.weights).array() + fit.intercept;
    Vector w(n), z(n);
    for (Index i = 0; i < n; ++i) {
      if (log_link) {
        const double mu = std::exp(eta(i));
        w(i) = std::pow(mu, 2.0 - p);
        z(i) = eta(i) + (y(i) - mu) / mu;
      } else {
        w(i) = 1.0;
        z(i) = y(i);
      }
    }
    const auto sol = solve_weighted(X, z, w, nn * alpha);
    fit.jitter_applied = fit.jitter_applied || sol.jitter;
    LinearFit trial = fit;
    trial.weights = sol.beta;
    trial.intercept = sol.intercept;
    double trial_dev = deviance_of(trial);
    // Step halving keeps the deviance from increasing.
    for (int h = 0; h < 30 && !(trial_dev <= dev) ; ++h) {
      trial.weights = 0.5 * (trial.weights + fit.weights);
      trial.intercept = 0.5 * (trial.intercept + fit.intercept);
      trial_dev = deviance_of(trial);
    }
    if (!std::isfinite(trial_dev)) throw Error(ErrorCode::divergence, "tweedie IRLS produced a non-finite deviance");
    const double change = std::abs(dev - trial_dev) / (std::abs(trial_dev) + 0.1);
    if (trial_dev <= dev) {
      fit.weights = trial.weights;
      fit.intercept = trial.intercept;
      dev = trial_dev;
    }
    fit.objective_trace.push_back(dev);
    if (change < 1e-10) {
      fit.converged = true;
      ++it;
      break;
    }
  }
  fit.iterations = it;
  fit.dispersion = dev / (n > d + 1 ? nn - static_cast<double>(d) - 1.0 : nn);
  fit.residual_variance = fit.dispersion;
  return fit;
}

// ---------------------------------------------------------------------------
// CART
// ---------------------------------------------------------------------------

namespace {

struct TreeBuilder {
  const Matrix& X;
  const Vector& y;
  TreeTask task;
  int n_classes;
  int max_depth;
  Index min_leaf;
  std::vector<TreeNode> nodes;

  // Regression: sum of squared deviations. Classification: n * Gini.
  double impurity(const std::vector<Index>& idx) const {
    const double n = static_cast<double>(idx.size());
    if (task == TreeTask::regression) {
      double mean = 0.0;
      for (Index i : idx) mean += y(i);
      mean /= n;
      double s = 0.0;
      for (Index i : idx) s += (y(i) - mean) * (y(i) - mean);
      return s;
    }
    std::vector<double> counts(static_cast<std::size_t>(n_classes), 0.0);
    for (Index i : idx) counts[static_cast<std::size_t>(y(i))] += 1.0;
    double g = 1.0;
    for (double c : counts) g -= (c / n) * (c / n);
    return n * g;
  }

  bool is_pure(const std::vector<Index>& idx) const {
    for (Index i : idx)
      if (y(i) != y(idx.front())) return false;
    return true;
  }

  void make_leaf(TreeNode& node, const std::vector<Index>& idx) const {
    const double n = static_cast<double>(idx.size());
    if (task == TreeTask::regression) {
      double s = 0.0;
      for (Index i : idx) s += y(i);
      node.value = s / n;
    } else {
      node.distribution.assign(static_cast<std::size_t>(n_classes), 0.0);
      for (Index i : idx) node.distribution[static_cast<std::size_t>(y(i))] += 1.0;
      for (double& c : node.distribution) c /= n;
      node.value = static_cast<double>(
          std::max_element(node.distribution.begin(), node.distribution.end()) - node.distribution.begin());
    }
  }

  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = -std::numeric_limits<double>::infinity();
  };

  Split best_split(const std::vector<Index>& idx, double parent) const {
    Split best;
    const Index n = static_cast<Index>(idx.size());
    double node_mean = 0.0;
    if (task == TreeTask::regression) {
      for (Index i : idx) node_mean += y(i);
      node_mean /= static_cast<double>(n);
    }
    std::vector<Index> order = idx;
    for (Index f = 0; f < X.cols(); ++f) {
      std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return X(a, f) < X(b, f); });
      double ls = 0.0, lss = 0.0;
      double total_s = 0.0, total_ss = 0.0;
      std::vector<double> lc, tc;
      if (task == TreeTask::regression) {
        for (Index i : order) {
          const double v = y(i) - node_mean;
          total_s += v;
          total_ss += v * v;
        }
      } else {
        lc.assign(static_cast<std::size_t>(n_classes), 0.0);
        tc.assign(static_cast<std::size_t>(n_classes), 0.0);
        for (Index i : order) tc[static_cast<std::size_t>(y(i))] += 1.0;
      }
      for (Index t = 0; t + 1 < n; ++t) {
        const Index i = order[static_cast<std::size_t>(t)];
        if (task == TreeTask::regression) {
          const double v = y(i) - node_mean;
          ls += v;
          lss += v * v;
        } else {
          lc[static_cast<std::size_t>(y(i))] += 1.0;
        }
        const double xl = X(i, f);
        const double xr = X(order[static_cast<std::size_t>(t + 1)], f);
        if (xl == xr) continue;
        const Index nl = t + 1, nr = n - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        double child;
        if (task == TreeTask::regression) {
          const double rs = total_s - ls, rss = total_ss - lss;
          child = (lss - ls * ls / static_cast<double>(nl)) + (rss - rs * rs / static_cast<double>(nr));
        } else {
          double gl = 1.0, gr = 1.0;
          for (int c = 0; c < n_classes; ++c) {
            const double l = lc[static_cast<std::size_t>(c)];
            const double r = tc[static_cast<std::size_t>(c)] - l;
            gl -= (l / static_cast<double>(nl)) * (l / static_cast<double>(nl));
            gr -= (r / static_cast<double>(nr)) * (r / static_cast<double>(nr));
          }
          child = static_cast<double>(nl) * gl + static_cast<double>(nr) * gr;
        }
        const double gain = parent - child;
        if (gain > best.gain) {
          double thr = 0.5 * (xl + xr);
          if (!(thr < xr)) thr = xl;
          best = {static_cast<int>(f), thr, gain};
        }
      }
    }
    return best;
  }

  int build(const std::vector<Index>& idx, int depth) {
    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    nodes[id].depth = depth;
    nodes[id].n_samples = static_cast<Index>(idx.size());
    make_leaf(nodes[id], idx);
    if (depth >= max_depth || is_pure(idx) || static_cast<Index>(idx.size()) < 2 * min_leaf) return id;
    const double parent = impurity(idx);
    const Split s = best_split(idx, parent);
    if (s.feature < 0) return id;
    std::vector<Index> left, right;
    for (Index i : idx) (X(i, s.feature) <= s.threshold ? left : right).push_back(i);
    nodes[id].feature = s.feature;
    nodes[id].threshold = s.threshold;
    nodes[id].impurity_decrease = std::max(s.gain, 0.0);
    const int l = build(left, depth + 1);
    const int r = build(right, depth + 1);
    nodes[id].left = l;
    nodes[id].right = r;
    return id;
  }
};

}  // namespace

const TreeNode& TreeModel::leaf_for(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  const TreeNode* node = &nodes.front();
  while (!node->is_leaf()) node = &nodes[static_cast<std::size_t>(row(node->feature) <= node->threshold ? node->left : node->right)];
  return *node;
}

int TreeModel::depth() const {
  int d = 0;
  for (const auto& n : nodes) d = std::max(d, n.depth);
  return d;
}

Index TreeModel::n_leaves() const {
  return std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); });
}

TreeModel fit_tree(const Matrix& X, const Vector& y, TreeTask task, int max_depth, Index min_leaf) {
  check_xy(X, y);
  if (max_depth < 1) throw Error(ErrorCode::parameter, "max_depth must be >= 1");
  if (min_leaf < 1) throw Error(ErrorCode::parameter, "min_leaf must be >= 1");
  int n_classes = 0;
  if (task == TreeTask::classification) {
    for (Index i = 0; i < y.size(); ++i) {
      if (y(i) < 0.0 || y(i) != std::floor(y(i))) throw Error(ErrorCode::domain, "class labels must be non-negative integers");
      n_classes = std::max(n_classes, static_cast<int>(y(i)) + 1);
    }
  }
  TreeBuilder b{X, y, task, n_classes, max_depth, min_leaf, {}};
  std::vector<Index> all(static_cast<std::size_t>(X.rows()));
  std::iota(all.begin(), all.end(), Index{0});
  b.build(all, 0);
  TreeModel model;
  model.task = task;
  model.n_classes = n_classes;
  model.n_features = X.cols();
  model.nodes = std::move(b.nodes);
  return model;
}

Vector tree_feature_importance(const TreeModel& tree) {
  Vector imp = Vector::Zero(tree.n_features);
  for (const auto& n : tree.nodes)
    if (!n.is_leaf()) imp(n.feature) += n.impurity_decrease;
  const double s = imp.sum();
  if (s > 0.0) imp /= s;
  return imp;
}

// ---------------------------------------------------------------------------
// MLP
// ---------------------------------------------------------------------------

MlpSpec role_classifier_spec(std::uint64_t seed) {
  MlpSpec s;
  s.layer_sizes = {46, 40, 30, 5};
  s.dropout_rates = {0.5, 0.5};
  s.output = OutputKind::softmax;
  s.seed = seed;
  s.epochs = 200;
  s.batch_size = 32;
  s.learning_rate = 0.05;
  return s;
}

MlpSpec regression_mlp_spec(Index n_inputs, std::uint64_t seed) {
  MlpSpec s;
  s.layer_sizes = {n_inputs, 16, 1};
  s.dropout_rates = {0.0};
  s.output = OutputKind::identity;
  s.seed = seed;
  s.epochs = 300;
  s.batch_size = 16;
  s.learning_rate = 0.01;
  return s;
}

namespace {

void validate_spec(const MlpSpec& s) {
  if (s.layer_sizes.size() < 2) throw Error(ErrorCode::parameter, "an MLP needs input and output sizes");
  for (Index n : s.layer_sizes)
    if (n < 1) throw Error(ErrorCode::parameter, "layer sizes must be >= 1");
  if (s.dropout_rates.size() != s.layer_sizes.size() - 2)
    throw Error(ErrorCode::parameter, "one dropout rate per hidden layer required");
  for (double r : s.dropout_rates)
    if (!(r >= 0.0 && r < 1.0)) throw Error(ErrorCode::parameter, "dropout rates must lie in [0, 1)");
  if (s.epochs < 1 || s.batch_size < 1 || !(s.learning_rate > 0.0))
    throw Error(ErrorCode::parameter, "epochs, batch_size and learning_rate must be positive");
}

void softmax_rows(Matrix& z) {
  for (Index i = 0; i < z.rows(); ++i) {
    const double m = z.row(i).maxCoeff();
    z.row(i) = (z.row(i).array() - m).exp();
    z.row(i) /= z.row(i).sum();
  }
}

}  // namespace

Mlp::Mlp(const MlpSpec& spec) : spec_(spec) {
  validate_spec(spec_);
  Rng rng(spec_.seed);
  for (std::size_t l = 0; l + 1 < spec_.layer_sizes.size(); ++l) {
    const Index in = spec_.layer_sizes[l], out = spec_.layer_sizes[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(in));
    DenseLayer layer;
    layer.weights.resize(out, in);
    for (Index j = 0; j < in; ++j)
      for (Index i = 0; i < out; ++i) layer.weights(i, j) = rng.uniform(-bound, bound);
    layer.bias = Vector::Zero(out);
    layers_.push_back(std::move(layer));
  }
}

Matrix Mlp::predict(const Matrix& X) const {
  if (X.cols() != spec_.layer_sizes.front())
    throw Error(ErrorCode::dimension, "network expects " + std::to_string(spec_.layer_sizes.front()) + " inputs, got " + std::to_string(X.cols()));
  Matrix a = X;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Matrix z = (a * layers_[l].weights.transpose()).rowwise() + layers_[l].bias.transpose();
    if (l + 1 < layers_.size()) a = z.cwiseMax(0.0);
    else a = std::move(z);
  }
  if (spec_.output == OutputKind::softmax) softmax_rows(a);
  return a;
}

double Mlp::loss_and_gradient(const Matrix& X, const Vector& y, Vector* gradient, Rng* dropout_rng) const {
  const Index n = X.rows();
  const std::size_t L = layers_.size();
  std::vector<Matrix> acts{X};  // post-activation, post-dropout inputs to each layer
  std::vector<Matrix> pre;      // pre-activations of hidden layers
  std::vector<Matrix> masks;
  acts.reserve(L + 1);
  for (std::size_t l = 0; l < L; ++l) {
    Matrix z = (acts.back() * layers_[l].weights.transpose()).rowwise() + layers_[l].bias.transpose();
    if (l + 1 < L) {
      Matrix a = z.cwiseMax(0.0);
      const double rate = spec_.dropout_rates[l];
      Matrix mask = Matrix::Ones(a.rows(), a.cols());
      if (dropout_rng && rate > 0.0) {
        const double keep = 1.0 - rate;
        for (Index j = 0; j < mask.cols(); ++j)
          for (Index i = 0; i < mask.rows(); ++i) mask(i, j) = dropout_rng->uniform() < keep ? 1.0 / keep : 0.0;
        a = a.cwiseProduct(mask);
      }
      pre.push_back(std::move(z));
      masks.push_back(std::move(mask));
      acts.push_back(std::move(a));
    } else {
      acts.push_back(std::move(z));
    }
  }

  Matrix& out = acts.back();
  const double nn = static_cast<double>(n);
  double loss = 0.0;
  Matrix delta;
  if (spec_.output == OutputKind::softmax) {
    softmax_rows(out);
    delta = out;
    for (Index i = 0; i < n; ++i) {
      const auto c = static_cast<Index>(y(i));
      if (c < 0 || c >= out.cols()) throw Error(ErrorCode::domain, "class index out of range for softmax output");
      loss -= std::log(std::max(out(i, c), 1e-300));
      delta(i, c) -= 1.0;
    }
    loss /= nn;
    delta /= nn;
  } else {
    if (out.cols() != 1) throw Error(ErrorCode::dimension, "identity output with a vector target needs one output unit");
    const Vector diff = out.col(0) - y;
    loss = diff.squaredNorm() / nn;
    delta = 2.0 * diff / nn;
  }
  if (!gradient) return loss;

  std::vector<DenseLayer> grads(L);
  for (std::size_t l = L; l-- > 0;) {
    grads[l].weights = delta.transpose() * acts[l];
    grads[l].bias = delta.colwise().sum().transpose();
    if (l == 0) break;
    Matrix back = delta * layers_[l].weights;
    back = back.cwiseProduct(masks[l - 1]);
    delta = back.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
  }
  gradient->resize(n_parameters());
  Index k = 0;
  for (const auto& g : grads) {
    gradient->segment(k, g.weights.size()) = Eigen::Map<const Vector>(g.weights.data(), g.weights.size());
    k += g.weights.size();
    gradient->segment(k, g.bias.size()) = g.bias;
    k += g.bias.size();
  }
  return loss;
}

Index Mlp::n_parameters() const {
  Index k = 0;
  for (const auto& l : layers_) k += l.weights.size() + l.bias.size();
  return k;
}

Vector Mlp::parameters() const {
  Vector theta(n_parameters());
  Index k = 0;
  for (const auto& l : layers_) {
    theta.segment(k, l.weights.size()) = Eigen::Map<const Vector>(l.weights.data(), l.weights.size());
    k += l.weights.size();
    theta.segment(k, l.bias.size()) = l.bias;
    k += l.bias.size();
  }
  return theta;
}

void Mlp::set_parameters(const Vector& theta) {
  if (theta.size() != n_parameters()) throw Error(ErrorCode::dimension, "parameter vector has the wrong length");
  Index k = 0;
  for (auto& l : layers_) {
    Eigen::Map<Vector>(l.weights.data(), l.weights.size()) = theta.segment(k, l.weights.size());
    k += l.weights.size();
    l.bias = theta.segment(k, l.bias.size());
    k += l.bias.size();
  }
}

namespace {

double class_accuracy(const Matrix& proba, const Vector& y) {
  Index hits = 0;
  for (Index i = 0; i < proba.rows(); ++i) {
    Index arg = 0;
    proba.row(i).maxCoeff(&arg);
    if (static_cast<double>(arg) == y(i)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(proba.rows());
}

}  // namespace

MlpFit mlp_train(const Matrix& X, const Vector& y, const MlpSpec& spec, const std::optional<Validation>& validation) {
  check_xy(X, y);
  MlpFit fit{Mlp(spec), {}};
  Mlp& net = fit.network;
  if (X.cols() != spec.layer_sizes.front())
    throw Error(ErrorCode::dimension, "spec expects " + std::to_string(spec.layer_sizes.front()) + " inputs");
  Rng order_rng(spec.seed ^ 0x5EEDULL);
  Rng dropout_rng(spec.seed ^ 0xD50FULL);
  const Index n = X.rows();
  const bool softmax = spec.output == OutputKind::softmax;

  Vector grad;
  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    const auto order = shuffled_indices(n, order_rng);
    for (Index start = 0; start < n; start += spec.batch_size) {
      const Index m = std::min(spec.batch_size, n - start);
      Matrix xb(m, X.cols());
      Vector yb(m);
      for (Index r = 0; r < m; ++r) {
        xb.row(r) = X.row(order[static_cast<std::size_t>(start + r)]);
        yb(r) = y(order[static_cast<std::size_t>(start + r)]);
      }
      net.loss_and_gradient(xb, yb, &grad, &dropout_rng);
      Index k = 0;
      for (auto& layer : net.layers()) {
        Eigen::Map<Vector>(layer.weights.data(), layer.weights.size()) -= spec.learning_rate * grad.segment(k, layer.weights.size());
        k += layer.weights.size();
        layer.bias -= spec.learning_rate * grad.segment(k, layer.bias.size());
        k += layer.bias.size();
      }
    }
    const double train_loss = net.loss(X, y);
    if (!std::isfinite(train_loss))
      throw Error(ErrorCode::divergence, "training loss became non-finite at epoch " + std::to_string(epoch + 1));
    fit.report.train_loss.push_back(train_loss);
    if (softmax) fit.report.train_accuracy.push_back(class_accuracy(net.predict(X), y));
    if (validation) {
      const double vl = net.loss(validation->X, validation->y);
      if (!std::isfinite(vl))
        throw Error(ErrorCode::divergence, "validation loss became non-finite at epoch " + std::to_string(epoch + 1));
      fit.report.validation_loss.push_back(vl);
      if (softmax) fit.report.validation_accuracy.push_back(class_accuracy(net.predict(validation->X), validation->y));
    }
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

double r2_score(const Vector& y, const Vector& yhat) {
  if (y.size() != yhat.size() || y.size() < 2) throw Error(ErrorCode::dimension, "r2 needs two equal-length vectors of size >= 2");
  const double ss_tot = (y.array() - y.mean()).square().sum();
  if (ss_tot == 0.0) throw Error(ErrorCode::undefined_r2, "target is constant");
  return 1.0 - (y - yhat).squaredNorm() / ss_tot;
}

double accuracy(const Vector& y, const Vector& yhat) {
  if (y.size() != yhat.size() || y.size() < 1) throw Error(ErrorCode::dimension, "accuracy needs two equal-length non-empty vectors");
  Index hits = 0;
  for (Index i = 0; i < y.size(); ++i)
    if (y(i) == yhat(i)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(y.size());
}

Attribution standardized_coefficients(const LinearFit& fit, const Matrix& X, const Vector& y) {
  check_xy(X, y);
  if (X.cols() != fit.weights.size()) throw Error(ErrorCode::dimension, "fit and X disagree on feature count");
  const double nn = static_cast<double>(X.rows());
  const double sy = std::sqrt((y.array() - y.mean()).square().sum() / nn);
  if (sy == 0.0) throw Error(ErrorCode::domain, "standardized coefficients are undefined for a constant target");
  Vector factor(X.cols());
  for (Index j = 0; j < X.cols(); ++j) factor(j) = std::sqrt((X.col(j).array() - X.col(j).mean()).square().sum() / nn) / sy;

  Attribution a;
  a.method = "standardized_coefficients";
  a.feature_names = fit.feature_names;
  a.values = fit.weights.cwiseProduct(factor);
  if (fit.weight_stderr) {
    const Vector se = fit.weight_stderr->cwiseProduct(factor);
    a.uncertainty = se;
    a.lower = a.values - 1.96 * se;
    a.upper = a.values + 1.96 * se;
  }
  return a;
}

}  // namespace courtlens
