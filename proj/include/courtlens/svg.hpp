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

#ifndef COURTLENS_SVG_HPP
#define COURTLENS_SVG_HPP

#include <json.hpp>

#include <string>
#include <vector>

namespace courtlens {

/// Plot kinds and the keys their data documents must carry:
///   weight_plot   feature_names, values, lower, upper
///   pdp           grid, values            (observed_x, observed_y optional)
///   scree         values
///   box_by_group  groups, values          (values: one array per group)
///   scatter       x, y                    (labels optional, one per point)
/// Every kind accepts optional title, xlabel and ylabel strings.
inline const std::vector<std::string>& plot_kinds() {
  static const std::vector<std::string> kinds{"weight_plot", "pdp", "scree", "box_by_group", "scatter"};
  return kinds;
}

/// Static SVG text. Labels are laid out with fixed monospace metrics, so the
/// output depends only on the input document.
std::string render_svg(const std::string& kind, const nlohmann::json& data);

}  // namespace courtlens

#endif  // COURTLENS_SVG_HPP
