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

#include "courtlens/common.hpp"

#include <cmath>
#include <numeric>

namespace courtlens {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::usage: return "usage";
    case ErrorCode::structural: return "structural";
    case ErrorCode::schema: return "schema";
    case ErrorCode::unimputable_column: return "unimputable_column";
    case ErrorCode::parameter_mismatch: return "parameter_mismatch";
    case ErrorCode::degenerate_split: return "degenerate_split";
    case ErrorCode::unsupported_degree: return "unsupported_degree";
    case ErrorCode::dimension: return "dimension";
    case ErrorCode::invalid_distance_matrix: return "invalid_distance_matrix";
    case ErrorCode::undefined_stress: return "undefined_stress";
    case ErrorCode::connectivity: return "connectivity";
    case ErrorCode::degenerate_labels: return "degenerate_labels";
    case ErrorCode::config: return "config";
    case ErrorCode::underdetermined: return "underdetermined";
    case ErrorCode::parameter: return "parameter";
    case ErrorCode::domain: return "domain";
    case ErrorCode::divergence: return "divergence";
    case ErrorCode::undefined_r2: return "undefined_r2";
    case ErrorCode::insufficient_data: return "insufficient_data";
    case ErrorCode::undefined_correlation: return "undefined_correlation";
    case ErrorCode::too_many_features: return "too_many_features";
    case ErrorCode::kernel_width: return "kernel_width";
    case ErrorCode::render: return "render";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

ErrorKind kind_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::usage:
    case ErrorCode::config:
      return ErrorKind::usage;
    case ErrorCode::underdetermined:
    case ErrorCode::divergence:
    case ErrorCode::undefined_r2:
    case ErrorCode::undefined_stress:
    case ErrorCode::undefined_correlation:
    case ErrorCode::kernel_width:
      return ErrorKind::numeric;
    default:
      return ErrorKind::data;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % n;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double m = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * m;
  has_spare_ = true;
  return u * m;
}

std::vector<Index> shuffled_indices(Index n, Rng& rng) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  rng.shuffle(idx);
  return idx;
}

}  // namespace courtlens
