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

#include "courtlens/tabular.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace courtlens {

namespace {

std::optional<double> parse_number(const std::string& s) {
  std::string_view v(s);
  while (!v.empty() && (v.front() == ' ' || v.front() == '\t')) v.remove_prefix(1);
  while (!v.empty() && (v.back() == ' ' || v.back() == '\t' || v.back() == '\r')) v.remove_suffix(1);
  if (v.empty()) return std::nullopt;
  if (v.front() == '+') v.remove_prefix(1);
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) return std::nullopt;
  return out;
}

bool is_missing_token(const std::string& s) { return s.empty() || s == "NA"; }

// Splits RFC-4180 records. Quoted fields may hold commas, doubled quotes and
// newlines.
std::vector<std::vector<std::string>> read_records(std::istream& in) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  char c;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
    record.clear();
  };
  while (in.get(c)) {
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_record();
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get(c);
      end_record();
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (in_quotes) throw Error(ErrorCode::structural, "unterminated quoted field");
  if (field_started || !field.empty() || !record.empty()) end_record();
  return records;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

Table::Table(std::vector<ColumnSpec> columns, std::vector<std::vector<Cell>> rows)
    : columns_(std::move(columns)), rows_(std::move(rows)) {
  std::set<std::string> seen;
  for (const auto& c : columns_) {
    if (c.name.empty()) throw Error(ErrorCode::schema, "empty column name");
    if (!seen.insert(c.name).second) throw Error(ErrorCode::schema, "duplicate column name '" + c.name + "'");
  }
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    if (rows_[r].size() != columns_.size()) {
      throw Error(ErrorCode::structural, "row " + std::to_string(r) + " has " + std::to_string(rows_[r].size()) +
                                             " cells, expected " + std::to_string(columns_.size()));
    }
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      const Cell& cell = rows_[r][c];
      if (columns_[c].kind == ColumnKind::numeric) {
        if (std::holds_alternative<std::string>(cell))
          throw Error(ErrorCode::schema, "text cell in numeric column '" + columns_[c].name + "'");
        if (const double* v = std::get_if<double>(&cell); v && !std::isfinite(*v))
          throw Error(ErrorCode::schema, "non-finite value in column '" + columns_[c].name + "'");
      }
    }
  }
}

std::optional<Index> Table::find(const std::string& name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i)
    if (columns_[i].name == name) return static_cast<Index>(i);
  return std::nullopt;
}

Index Table::index_of(const std::string& name) const {
  auto i = find(name);
  if (!i) throw Error(ErrorCode::schema, "no column named '" + name + "'");
  return *i;
}

std::vector<std::string> Table::names() const {
  std::vector<std::string> out;
  for (const auto& c : columns_) out.push_back(c.name);
  return out;
}

std::vector<std::string> Table::numeric_names() const {
  std::vector<std::string> out;
  for (const auto& c : columns_)
    if (c.kind == ColumnKind::numeric) out.push_back(c.name);
  return out;
}

Vector Table::column(const std::string& name) const {
  const Index j = index_of(name);
  if (columns_[j].kind != ColumnKind::numeric) throw Error(ErrorCode::schema, "column '" + name + "' is categorical");
  Vector v(n_rows());
  for (Index i = 0; i < n_rows(); ++i) {
    const double* x = std::get_if<double>(&rows_[i][j]);
    if (!x) throw Error(ErrorCode::schema, "missing value in column '" + name + "' row " + std::to_string(i));
    v(i) = *x;
  }
  return v;
}

Matrix Table::to_matrix(const std::vector<std::string>& names) const {
  Matrix m(n_rows(), static_cast<Index>(names.size()));
  for (std::size_t k = 0; k < names.size(); ++k) m.col(static_cast<Index>(k)) = column(names[k]);
  return m;
}

std::vector<std::string> Table::labels(const std::string& name) const {
  const Index j = index_of(name);
  std::vector<std::string> out;
  out.reserve(rows_.size());
  for (const auto& row : rows_) {
    const Cell& c = row[j];
    if (const auto* s = std::get_if<std::string>(&c)) out.push_back(*s);
    else if (const auto* d = std::get_if<double>(&c)) out.push_back(format_number(*d));
    else throw Error(ErrorCode::schema, "missing label in column '" + name + "'");
  }
  return out;
}

Table Table::select_rows(const std::vector<Index>& rows) const {
  std::vector<std::vector<Cell>> out;
  out.reserve(rows.size());
  for (Index r : rows) out.push_back(rows_.at(static_cast<std::size_t>(r)));
  return Table(columns_, std::move(out));
}

Table parse_csv(std::istream& in, const std::optional<std::vector<ColumnSpec>>& spec) {
  auto records = read_records(in);
  if (records.empty()) throw Error(ErrorCode::structural, "missing header row");
  const auto& header = records.front();
  const std::size_t width = header.size();
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != width) {
      throw Error(ErrorCode::structural, "row " + std::to_string(r - 1) + " has " + std::to_string(records[r].size()) +
                                             " fields, header has " + std::to_string(width));
    }
  }

  std::vector<ColumnSpec> columns;
  if (spec) {
    if (spec->size() != width) throw Error(ErrorCode::schema, "column spec does not match header width");
    for (std::size_t c = 0; c < width; ++c) {
      if ((*spec)[c].name != header[c])
        throw Error(ErrorCode::schema, "header '" + header[c] + "' does not match spec '" + (*spec)[c].name + "'");
    }
    columns = *spec;
  } else {
    for (std::size_t c = 0; c < width; ++c) {
      bool numeric = true;
      for (std::size_t r = 1; r < records.size() && numeric; ++r) {
        const auto& s = records[r][c];
        if (!is_missing_token(s) && !parse_number(s)) numeric = false;
      }
      columns.push_back({header[c], numeric ? ColumnKind::numeric : ColumnKind::categorical, true});
    }
  }

  std::vector<std::vector<Cell>> rows;
  rows.reserve(records.size() - 1);
  for (std::size_t r = 1; r < records.size(); ++r) {
    std::vector<Cell> row;
    row.reserve(width);
    for (std::size_t c = 0; c < width; ++c) {
      const auto& s = records[r][c];
      if (is_missing_token(s)) {
        row.emplace_back(Missing{});
      } else if (columns[c].kind == ColumnKind::numeric) {
        auto v = parse_number(s);
        if (v) row.emplace_back(*v);
        else row.emplace_back(Missing{});
      } else {
        row.emplace_back(s);
      }
      if (is_missing(row.back()) && !columns[c].allow_missing) {
        throw Error(ErrorCode::schema,
                    "missing value in column '" + columns[c].name + "' row " + std::to_string(r - 1));
      }
    }
    rows.push_back(std::move(row));
  }
  return Table(std::move(columns), std::move(rows));
}

Table load_csv(const std::filesystem::path& path, const std::optional<std::vector<ColumnSpec>>& spec) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open '" + path.string() + "'");
  return parse_csv(in, spec);
}

std::string format_number(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string to_csv(const Table& t) {
  std::ostringstream out;
  const auto& cols = t.columns();
  for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << quote_if_needed(cols[c].name);
  out << '\n';
  for (const auto& row : t.rows()) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ',';
      if (const auto* d = std::get_if<double>(&row[c])) out << format_number(*d);
      else if (const auto* s = std::get_if<std::string>(&row[c])) out << quote_if_needed(*s);
      else out << "NA";
    }
    out << '\n';
  }
  return out.str();
}

void write_csv(const Table& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write '" + path.string() + "'");
  out << to_csv(t);
}

ImputeStrategy parse_impute_strategy(const std::string& s) {
  if (s == "drop_rows" || s == "drop") return ImputeStrategy::drop_rows;
  if (s == "mean") return ImputeStrategy::mean;
  if (s == "median") return ImputeStrategy::median;
  throw Error(ErrorCode::config, "unknown imputation strategy '" + s + "'");
}

Table drop_or_impute(const Table& t, ImputeStrategy strategy) {
  const auto& cols = t.columns();
  if (strategy == ImputeStrategy::drop_rows) {
    std::vector<Index> keep;
    for (Index r = 0; r < t.n_rows(); ++r) {
      bool complete = true;
      for (std::size_t c = 0; c < cols.size(); ++c)
        if (cols[c].kind == ColumnKind::numeric && is_missing(t.at(r, static_cast<Index>(c)))) complete = false;
      if (complete) keep.push_back(r);
    }
    return t.select_rows(keep);
  }

  auto rows = t.rows();
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (cols[c].kind != ColumnKind::numeric) continue;
    std::vector<double> present;
    for (const auto& row : rows)
      if (const auto* d = std::get_if<double>(&row[c])) present.push_back(*d);
    if (present.size() == rows.size()) continue;
    if (present.empty()) throw Error(ErrorCode::unimputable_column, "column '" + cols[c].name + "' is entirely missing");
    double fill = 0.0;
    if (strategy == ImputeStrategy::mean) {
      for (double v : present) fill += v;
      fill /= static_cast<double>(present.size());
    } else {
      fill = median_of(present);
    }
    for (auto& row : rows)
      if (is_missing(row[c])) row[c] = fill;
  }
  return Table(cols, std::move(rows));
}

ScaledTable min_max_scale(const Table& t, const std::vector<std::string>& cols) {
  ScaledTable out;
  for (const auto& name : cols) {
    const Vector v = t.column(name);
    if (v.size() == 0) throw Error(ErrorCode::insufficient_data, "cannot scale an empty column");
    out.params.range[name] = {v.minCoeff(), v.maxCoeff()};
    if (v.minCoeff() == v.maxCoeff()) out.constant_columns.push_back(name);
  }
  out.table = apply_scaling(t, out.params);
  return out;
}

Table apply_scaling(const Table& t, const ScalingParams& p) {
  auto rows = t.rows();
  for (const auto& [name, mm] : p.range) {
    auto j = t.find(name);
    if (!j) throw Error(ErrorCode::parameter_mismatch, "scaling parameters name unknown column '" + name + "'");
    if (t.columns()[*j].kind != ColumnKind::numeric)
      throw Error(ErrorCode::parameter_mismatch, "column '" + name + "' is not numeric");
    const double span = mm.second - mm.first;
    for (auto& row : rows) {
      if (auto* d = std::get_if<double>(&row[*j])) *d = span > 0.0 ? (*d - mm.first) / span : 0.0;
    }
  }
  return Table(t.columns(), std::move(rows));
}

Table invert_scaling(const Table& t, const ScalingParams& p) {
  auto rows = t.rows();
  for (const auto& [name, mm] : p.range) {
    auto j = t.find(name);
    if (!j) throw Error(ErrorCode::parameter_mismatch, "scaling parameters name unknown column '" + name + "'");
    const double span = mm.second - mm.first;
    for (auto& row : rows) {
      if (auto* d = std::get_if<double>(&row[*j])) *d = mm.first + *d * span;
    }
  }
  return Table(t.columns(), std::move(rows));
}

std::pair<Table, Table> train_test_split(const Table& t, const SplitSpec& s) {
  if (!(s.test_fraction > 0.0 && s.test_fraction < 1.0))
    throw Error(ErrorCode::parameter, "test_fraction must lie in (0, 1)");
  const Index n = t.n_rows();
  if (n < 2) throw Error(ErrorCode::degenerate_split, "need at least 2 rows to split");
  const auto n_test = static_cast<Index>(std::llround(static_cast<double>(n) * s.test_fraction));
  if (n_test <= 0 || n_test >= n)
    throw Error(ErrorCode::degenerate_split, "test fraction " + format_number(s.test_fraction) + " leaves an empty side for " +
                                                 std::to_string(n) + " rows");
  Rng rng(s.seed);
  auto order = shuffled_indices(n, rng);
  std::vector<Index> test(order.begin(), order.begin() + n_test);
  std::vector<Index> train(order.begin() + n_test, order.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {t.select_rows(train), t.select_rows(test)};
}

Matrix expand_polynomial(const Matrix& X, int degree) {
  if (degree < 1 || degree > 2)
    throw Error(ErrorCode::unsupported_degree, "polynomial degree " + std::to_string(degree) + " is not supported (1 or 2)");
  if (degree == 1) return X;
  const Index d = X.cols();
  Matrix out(X.rows(), d + d + d * (d - 1) / 2);
  out.leftCols(d) = X;
  out.middleCols(d, d) = X.array().square().matrix();
  Index k = 2 * d;
  for (Index i = 0; i < d; ++i)
    for (Index j = i + 1; j < d; ++j) out.col(k++) = X.col(i).cwiseProduct(X.col(j));
  return out;
}

std::vector<std::string> polynomial_names(const std::vector<std::string>& names, int degree) {
  if (degree < 1 || degree > 2)
    throw Error(ErrorCode::unsupported_degree, "polynomial degree " + std::to_string(degree) + " is not supported (1 or 2)");
  std::vector<std::string> out = names;
  if (degree == 1) return out;
  for (const auto& n : names) out.push_back(n + "^2");
  for (std::size_t i = 0; i < names.size(); ++i)
    for (std::size_t j = i + 1; j < names.size(); ++j) out.push_back(names[i] + "*" + names[j]);
  return out;
}

TableSummary describe(const Table& t) {
  TableSummary s;
  s.n_rows = t.n_rows();
  const auto names = t.numeric_names();
  const Matrix X = t.to_matrix(names);
  const Index n = X.rows();
  const Index d = X.cols();
  Matrix centered = X;
  for (Index j = 0; j < d; ++j) {
    ColumnSummary c;
    c.name = names[static_cast<std::size_t>(j)];
    c.count = n;
    if (n > 0) {
      c.mean = X.col(j).mean();
      centered.col(j).array() -= c.mean;
      c.std = std::sqrt(centered.col(j).squaredNorm() / static_cast<double>(n));
      c.min = X.col(j).minCoeff();
      c.max = X.col(j).maxCoeff();
    }
    s.columns.push_back(c);
  }
  s.correlation = Matrix::Identity(d, d);
  for (Index i = 0; i < d; ++i) {
    for (Index j = i + 1; j < d; ++j) {
      const double denom = centered.col(i).norm() * centered.col(j).norm();
      // Constant columns have no defined correlation; report 0.
      double r = denom > 0.0 ? centered.col(i).dot(centered.col(j)) / denom : 0.0;
      r = std::clamp(r, -1.0, 1.0);
      s.correlation(i, j) = s.correlation(j, i) = r;
    }
  }
  return s;
}

}  // namespace courtlens
