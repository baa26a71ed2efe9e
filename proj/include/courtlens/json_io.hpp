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

#ifndef COURTLENS_JSON_IO_HPP
#define COURTLENS_JSON_IO_HPP

#include "courtlens/common.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace courtlens {

inline nlohmann::json to_json_array(const Vector& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline nlohmann::json to_json_rows(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    nlohmann::json r = nlohmann::json::array();
    for (Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

inline Vector vector_from_json(const nlohmann::json& a) {
  Vector v(static_cast<Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Index>(i)) = a[i].get<double>();
  return v;
}

inline Matrix matrix_from_json(const nlohmann::json& rows) {
  const Index n = static_cast<Index>(rows.size());
  const Index d = n > 0 ? static_cast<Index>(rows[0].size()) : 0;
  Matrix m(n, d);
  for (Index i = 0; i < n; ++i) {
    if (static_cast<Index>(rows[i].size()) != d) throw Error(ErrorCode::schema, "ragged matrix in JSON document");
    for (Index j = 0; j < d; ++j) m(i, j) = rows[i][j].get<double>();
  }
  return m;
}

/// Pretty-printed with sorted keys; byte-stable for identical documents.
std::string dump_json(const nlohmann::json& j);
void write_json(const nlohmann::json& j, const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);
void write_text(const std::string& text, const std::filesystem::path& path);

}  // namespace courtlens

#endif  // COURTLENS_JSON_IO_HPP
