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

#ifndef COURTLENS_TABULAR_HPP
#define COURTLENS_TABULAR_HPP

#include "courtlens/common.hpp"

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace courtlens {

enum class ColumnKind { numeric, categorical };

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  bool allow_missing = true;
};

struct Missing {
  bool operator==(const Missing&) const = default;
};

/// A cell is missing, a finite number, or a category label.
using Cell = std::variant<Missing, double, std::string>;

inline bool is_missing(const Cell& c) { return std::holds_alternative<Missing>(c); }

/// Named, typed columns over row records. Construction validates the
/// invariants (unique names, rectangular rows, finite numeric cells), so a
/// Table value is always well formed.
class Table {
 public:
  Table() = default;
  Table(std::vector<ColumnSpec> columns, std::vector<std::vector<Cell>> rows);

  Index n_rows() const { return static_cast<Index>(rows_.size()); }
  Index n_cols() const { return static_cast<Index>(columns_.size()); }

  const std::vector<ColumnSpec>& columns() const { return columns_; }
  const std::vector<std::vector<Cell>>& rows() const { return rows_; }
  const Cell& at(Index row, Index col) const { return rows_[row][col]; }

  std::optional<Index> find(const std::string& name) const;
  Index index_of(const std::string& name) const;  // throws schema error
  std::vector<std::string> names() const;
  std::vector<std::string> numeric_names() const;

  /// Numeric column as a vector; missing cells throw.
  Vector column(const std::string& name) const;
  /// Numeric columns as an n x k matrix in the requested order.
  Matrix to_matrix(const std::vector<std::string>& names) const;
  /// Category labels of a column (numbers rendered as text).
  std::vector<std::string> labels(const std::string& name) const;

  Table select_rows(const std::vector<Index>& rows) const;

 private:
  std::vector<ColumnSpec> columns_;
  std::vector<std::vector<Cell>> rows_;
};

Table parse_csv(std::istream& in, const std::optional<std::vector<ColumnSpec>>& spec = std::nullopt);
Table load_csv(const std::filesystem::path& path,
               const std::optional<std::vector<ColumnSpec>>& spec = std::nullopt);
std::string to_csv(const Table& t);
void write_csv(const Table& t, const std::filesystem::path& path);

/// Shortest round-trip decimal for a double; used by CSV and report writers.
std::string format_number(double v);

enum class ImputeStrategy { drop_rows, mean, median };
ImputeStrategy parse_impute_strategy(const std::string& s);

Table drop_or_impute(const Table& t, ImputeStrategy strategy);

struct ScalingParams {
  std::map<std::string, std::pair<double, double>> range;  // name -> (min, max)
};

struct ScaledTable {
  Table table;
  ScalingParams params;
  std::vector<std::string> constant_columns;  // warning: mapped to 0.0
};

ScaledTable min_max_scale(const Table& t, const std::vector<std::string>& cols);
Table apply_scaling(const Table& t, const ScalingParams& p);
/// Inverse of apply_scaling for every column in p.
Table invert_scaling(const Table& t, const ScalingParams& p);

struct SplitSpec {
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
};

/// Deterministic shuffled partition; both sides keep the original row order.
std::pair<Table, Table> train_test_split(const Table& t, const SplitSpec& s);

/// degree 2 appends squares then pairwise products (i < j, lexicographic).
Matrix expand_polynomial(const Matrix& X, int degree);
std::vector<std::string> polynomial_names(const std::vector<std::string>& names, int degree);

struct ColumnSummary {
  std::string name;
  Index count = 0;
  double mean = 0.0;
  double std = 0.0;  // population
  double min = 0.0;
  double max = 0.0;
};

struct TableSummary {
  Index n_rows = 0;
  std::vector<ColumnSummary> columns;
  Matrix correlation;  // Pearson over numeric columns
};

TableSummary describe(const Table& t);

}  // namespace courtlens

#endif  // COURTLENS_TABULAR_HPP
