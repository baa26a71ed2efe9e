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

#include "courtlens/model.hpp"

#include "courtlens/json_io.hpp"

namespace courtlens {

using nlohmann::json;

FittedModel::FittedModel(std::string kind, Body body, std::vector<std::string> feature_names, json params)
    : kind_(std::move(kind)), body_(std::move(body)), feature_names_(std::move(feature_names)), params_(std::move(params)) {}

Index FittedModel::n_features() const {
  return std::visit(
      [](const auto& b) -> Index {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, LinearModel>) return b.fit.weights.size();
        else if constexpr (std::is_same_v<T, TreeModel>) return b.n_features;
        else return b.spec().layer_sizes.front();
      },
      body_);
}

Index FittedModel::n_outputs() const {
  return std::visit(
      [](const auto& b) -> Index {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, LinearModel>) return 1;
        else if constexpr (std::is_same_v<T, TreeModel>) return b.task == TreeTask::classification ? b.n_classes : 1;
        else return b.spec().layer_sizes.back();
      },
      body_);
}

bool FittedModel::is_classifier() const {
  if (const auto* t = std::get_if<TreeModel>(&body_)) return t->task == TreeTask::classification;
  if (const auto* m = std::get_if<Mlp>(&body_)) return m->spec().output == OutputKind::softmax;
  return false;
}

Matrix FittedModel::predict(const Matrix& X) const {
  if (X.cols() != n_features())
    throw Error(ErrorCode::dimension, "model expects " + std::to_string(n_features()) + " features, got " + std::to_string(X.cols()));
  return std::visit(
      [&](const auto& b) -> Matrix {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, LinearModel>) {
          return predict_linear(b.fit, b.glm, X);
        } else if constexpr (std::is_same_v<T, TreeModel>) {
          const bool cls = b.task == TreeTask::classification;
          Matrix out(X.rows(), cls ? b.n_classes : 1);
          for (Index i = 0; i < X.rows(); ++i) {
            const TreeNode& leaf = b.leaf_for(X.row(i));
            if (cls) out.row(i) = Eigen::Map<const Eigen::RowVectorXd>(leaf.distribution.data(), b.n_classes);
            else out(i, 0) = leaf.value;
          }
          return out;
        } else {
          return b.predict(X);
        }
      },
      body_);
}

Vector FittedModel::predict_column(const Matrix& X, Index output) const {
  if (output < 0 || output >= n_outputs()) throw Error(ErrorCode::dimension, "output index out of range");
  return predict(X).col(output);
}

Vector FittedModel::predict_label(const Matrix& X) const {
  const Matrix p = predict(X);
  if (!is_classifier()) return p.col(0);
  Vector out(p.rows());
  for (Index i = 0; i < p.rows(); ++i) {
    Index arg = 0;
    p.row(i).maxCoeff(&arg);
    out(i) = static_cast<double>(arg);
  }
  return out;
}

const LinearFit* FittedModel::linear_fit() const {
  const auto* l = std::get_if<LinearModel>(&body_);
  return l ? &l->fit : nullptr;
}

namespace {

json linear_to_json(const LinearModel& m) {
  json j;
  j["weights"] = to_json_array(m.fit.weights);
  j["intercept"] = m.fit.intercept;
  if (m.fit.weight_stderr) j["weight_stderr"] = to_json_array(*m.fit.weight_stderr);
  j["residual_variance"] = m.fit.residual_variance;
  j["converged"] = m.fit.converged;
  j["iterations"] = m.fit.iterations;
  j["jitter_applied"] = m.fit.jitter_applied;
  j["scale"] = m.fit.scale;
  j["glm"] = {{"power", m.glm.power}, {"dispersion", m.glm.dispersion}, {"link", m.glm.link == Link::log ? "log" : "identity"}};
  return j;
}

json tree_to_json(const TreeModel& t) {
  json j;
  j["task"] = t.task == TreeTask::classification ? "classification" : "regression";
  j["n_classes"] = t.n_classes;
  j["n_features"] = t.n_features;
  json nodes = json::array();
  for (const auto& n : t.nodes) {
    json jn = {{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right},
               {"value", n.value},     {"depth", n.depth},         {"n_samples", n.n_samples},
               {"impurity_decrease", n.impurity_decrease}};
    if (!n.distribution.empty()) jn["distribution"] = n.distribution;
    nodes.push_back(std::move(jn));
  }
  j["nodes"] = std::move(nodes);
  return j;
}

json mlp_to_json(const Mlp& m) {
  const auto& s = m.spec();
  json j;
  j["layer_sizes"] = s.layer_sizes;
  j["dropout_rates"] = s.dropout_rates;
  j["output"] = s.output == OutputKind::softmax ? "softmax" : "identity";
  j["seed"] = s.seed;
  j["epochs"] = s.epochs;
  j["batch_size"] = s.batch_size;
  j["learning_rate"] = s.learning_rate;
  json layers = json::array();
  for (const auto& l : m.layers()) layers.push_back({{"weights", to_json_rows(l.weights)}, {"bias", to_json_array(l.bias)}});
  j["layers"] = std::move(layers);
  return j;
}

}  // namespace

json to_json(const FittedModel& m) {
  json j;
  j["kind"] = m.kind();
  j["params"] = m.params();
  j["feature_names"] = m.feature_names();
  std::visit(
      [&](const auto& b) {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, LinearModel>) j["linear"] = linear_to_json(b);
        else if constexpr (std::is_same_v<T, TreeModel>) j["tree"] = tree_to_json(b);
        else j["mlp"] = mlp_to_json(b);
      },
      m.body());
  if (m.train_report) {
    const auto& r = *m.train_report;
    j["train_report"] = {{"train_loss", r.train_loss},
                         {"validation_loss", r.validation_loss},
                         {"train_accuracy", r.train_accuracy},
                         {"validation_accuracy", r.validation_accuracy}};
  }
  return j;
}

FittedModel model_from_json(const json& j) {
  try {
    const auto names = j.at("feature_names").get<std::vector<std::string>>();
    const std::string kind = j.at("kind").get<std::string>();
    const json params = j.value("params", json::object());
    if (j.contains("linear")) {
      const json& l = j["linear"];
      LinearModel m;
      m.fit.weights = vector_from_json(l.at("weights"));
      m.fit.intercept = l.at("intercept").get<double>();
      if (l.contains("weight_stderr")) m.fit.weight_stderr = vector_from_json(l["weight_stderr"]);
      m.fit.residual_variance = l.value("residual_variance", 0.0);
      m.fit.converged = l.value("converged", true);
      m.fit.iterations = l.value("iterations", 0);
      m.fit.jitter_applied = l.value("jitter_applied", false);
      m.fit.scale = l.value("scale", 0.0);
      m.fit.feature_names = names;
      const json& g = l.at("glm");
      m.glm = {g.at("power").get<double>(), g.at("dispersion").get<double>(),
               g.at("link").get<std::string>() == "log" ? Link::log : Link::identity};
      return FittedModel(kind, m, names, params);
    }
    if (j.contains("tree")) {
      const json& t = j["tree"];
      TreeModel tree;
      tree.task = t.at("task").get<std::string>() == "classification" ? TreeTask::classification : TreeTask::regression;
      tree.n_classes = t.at("n_classes").get<int>();
      tree.n_features = t.at("n_features").get<Index>();
      for (const auto& jn : t.at("nodes")) {
        TreeNode n;
        n.feature = jn.at("feature").get<int>();
        n.threshold = jn.at("threshold").get<double>();
        n.left = jn.at("left").get<int>();
        n.right = jn.at("right").get<int>();
        n.value = jn.at("value").get<double>();
        n.depth = jn.at("depth").get<int>();
        n.n_samples = jn.at("n_samples").get<Index>();
        n.impurity_decrease = jn.value("impurity_decrease", 0.0);
        if (jn.contains("distribution")) n.distribution = jn["distribution"].get<std::vector<double>>();
        tree.nodes.push_back(std::move(n));
      }
      return FittedModel(kind, tree, names, params);
    }
    if (j.contains("mlp")) {
      const json& m = j["mlp"];
      MlpSpec s;
      s.layer_sizes = m.at("layer_sizes").get<std::vector<Index>>();
      s.dropout_rates = m.at("dropout_rates").get<std::vector<double>>();
      s.output = m.at("output").get<std::string>() == "softmax" ? OutputKind::softmax : OutputKind::identity;
      s.seed = m.at("seed").get<std::uint64_t>();
      s.epochs = m.at("epochs").get<int>();
      s.batch_size = m.at("batch_size").get<Index>();
      s.learning_rate = m.at("learning_rate").get<double>();
      Mlp net(s);
      const auto& layers = m.at("layers");
      if (layers.size() != net.layers().size()) throw Error(ErrorCode::schema, "layer count mismatch in model file");
      for (std::size_t l = 0; l < layers.size(); ++l) {
        net.layers()[l].weights = matrix_from_json(layers[l].at("weights"));
        net.layers()[l].bias = vector_from_json(layers[l].at("bias"));
      }
      FittedModel fm(kind, std::move(net), names, params);
      return fm;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::schema, std::string("malformed model document: ") + e.what());
  }
  throw Error(ErrorCode::schema, "model document has no linear, tree or mlp body");
}

}  // namespace courtlens
