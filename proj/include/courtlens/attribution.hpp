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

#ifndef COURTLENS_ATTRIBUTION_HPP
#define COURTLENS_ATTRIBUTION_HPP

#include "courtlens/common.hpp"

#include <optional>
#include <string>
#include <vector>

namespace courtlens {

/// Per-feature explanation record shared by Shapley, permutation importance
/// and standardized weights.
struct Attribution {
  std::string method;
  std::vector<std::string> feature_names;
  Vector values;
  double baseline = 0.0;
  std::optional<Vector> uncertainty;  // standard error / deviation per feature
  std::optional<Vector> lower;        // interval bounds, when meaningful
  std::optional<Vector> upper;
};

}  // namespace courtlens

#endif  // COURTLENS_ATTRIBUTION_HPP
