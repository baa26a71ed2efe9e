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

#ifndef COURTLENS_MODEL_HPP
#define COURTLENS_MODEL_HPP

#include "courtlens/regress.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace courtlens {

struct LinearModel {
  LinearFit fit;
  GlmSpec glm;
};

/// A trained predictor of any family. predict() is a pure function of the
/// model and its input: dropout is off and nothing is cached.
class FittedModel {
 public:
  using Body = std::variant<LinearModel, TreeModel, Mlp>;

  FittedModel(std::string kind, Body body, std::vector<std::string> feature_names, nlohmann::json params = {});

  const std::string& kind() const { return kind_; }
  const Body& body() const { return body_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const nlohmann::json& params() const { return params_; }
  Index n_features() const;
  /// Columns of predict(): 1 for regression, class count for classifiers.
  Index n_outputs() const;
  bool is_classifier() const;

  /// n x n_outputs; classifier rows are probabilities summing to one.
  Matrix predict(const Matrix& X) const;
  /// One output column (a class probability for classifiers).
  Vector predict_column(const Matrix& X, Index output = 0) const;
  /// Regression values or argmax class indices.
  Vector predict_label(const Matrix& X) const;

  const LinearFit* linear_fit() const;

  std::optional<TrainReport> train_report;

 private:
  std::string kind_;
  Body body_;
  std::vector<std::string> feature_names_;
  nlohmann::json params_;
};

nlohmann::json to_json(const FittedModel& m);
FittedModel model_from_json(const nlohmann::json& j);

}  // namespace courtlens

#endif  // COURTLENS_MODEL_HPP
