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

#ifndef COURTLENS_COMMON_HPP
#define COURTLENS_COMMON_HPP

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace courtlens {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Broad failure classes. Each maps onto one CLI exit code.
enum class ErrorKind { usage, data, numeric };

enum class ErrorCode {
  usage,
  structural,
  schema,
  unimputable_column,
  parameter_mismatch,
  degenerate_split,
  unsupported_degree,
  dimension,
  invalid_distance_matrix,
  undefined_stress,
  connectivity,
  degenerate_labels,
  config,
  underdetermined,
  parameter,
  domain,
  divergence,
  undefined_r2,
  insufficient_data,
  undefined_correlation,
  too_many_features,
  kernel_width,
  render,
  io,
};

std::string_view to_string(ErrorCode code);
ErrorKind kind_of(ErrorCode code);

/// The single exception type thrown by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  ErrorKind kind() const noexcept { return kind_of(code_); }
  /// The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

/// Seeded splitmix64 stream. Every random draw in the library goes through
/// this type so that one seed reproduces a run bit for bit.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Rejection sampling keeps it unbiased.
  std::uint64_t below(std::uint64_t n);

  /// Standard normal via the polar Box-Muller method.
  double normal();

  double normal(double mean, double sd) { return mean + sd * normal(); }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  /// Derives an independent stream, e.g. one per trial or per feature.
  Rng split(std::uint64_t salt) { return Rng(next_u64() ^ (salt * 0xD1B54A32D192ED03ULL)); }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Identity permutation of size n shuffled by rng.
std::vector<Index> shuffled_indices(Index n, Rng& rng);

}  // namespace courtlens

#endif  // COURTLENS_COMMON_HPP
