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

#ifndef COURTLENS_FIXTURES_HPP
#define COURTLENS_FIXTURES_HPP

#include "courtlens/tabular.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace courtlens {

/// Synthetic stand-ins for the three basketball datasets. The generating
/// parameters are returned alongside the table so tests can check recovery.
struct Fixture {
  std::string kind;
  Table table;
  nlohmann::json truth;
};

inline const std::vector<std::string>& fixture_kinds() {
  static const std::vector<std::string> kinds{"four_factors", "roles", "salary"};
  return kinds;
}

/// Population R^2 the four-factors noise is calibrated to.
inline constexpr double kFourFactorsR2 = 0.81;
/// Exact number of role-level DRPM means the Tukey test separates.
inline constexpr int kRoleDrpmRejections = 7;

Fixture make_fixture(const std::string& kind, Index n, std::uint64_t seed);

/// Writes the CSV and a `<stem>.truth.json` sidecar next to it.
void write_fixture(const Fixture& f, const std::filesystem::path& csv_path);
std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

}  // namespace courtlens

#endif  // COURTLENS_FIXTURES_HPP
