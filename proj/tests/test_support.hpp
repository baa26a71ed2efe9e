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

#ifndef COURTLENS_TEST_SUPPORT_HPP
#define COURTLENS_TEST_SUPPORT_HPP

#include "courtlens/common.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <string>

namespace courtlens::testing {

inline Matrix gaussian_matrix(Index n, Index d, Rng& rng) {
  Matrix m(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) m(i, j) = rng.normal();
  return m;
}

inline Vector gaussian_vector(Index n, Rng& rng) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = rng.normal();
  return v;
}

inline std::filesystem::path data_dir() { return COURTLENS_DATA_DIR; }

/// Fresh, empty scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto p = std::filesystem::path(COURTLENS_SCRATCH_DIR) / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace courtlens::testing

#define EXPECT_THROW_CODE(stmt, expected)                                   \
  do {                                                                      \
    try {                                                                   \
      stmt;                                                                 \
      ADD_FAILURE() << "expected " #expected;                               \
    } catch (const ::courtlens::Error& e) {                                 \
      EXPECT_EQ(e.code(), ::courtlens::ErrorCode::expected) << e.what();    \
    }                                                                       \
  } while (0)

#endif  // COURTLENS_TEST_SUPPORT_HPP
