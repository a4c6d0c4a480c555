#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "strata_icer/error.hpp"

namespace strata_icer {

enum class Arm { experimental, control };

constexpr const char* to_string(Arm a) {
  return a == Arm::experimental ? "experimental" : "control";
}

/// Accepted arm spellings (case-insensitive):
///   experimental | e | treatment  ->  experimental
///   control | c                   ->  control
inline std::optional<Arm> parse_arm(std::string_view s) {
  std::string lower(s);
  for (char& c : lower) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  if (lower == "experimental" || lower == "e" || lower == "treatment") return Arm::experimental;
  if (lower == "control" || lower == "c") return Arm::control;
  return std::nullopt;
}

struct PatientRecord {
  std::string id;
  Arm arm = Arm::control;
  double cost = 0.0;
  double effect = 0.0;
  std::vector<double> factors;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view s) {
  const char* begin = s.data();
  const char* end = begin + s.size();
  double value{};
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return value;
}

/// Shortest decimal rendering that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline void check_csv_safe(const std::string& text, const char* what) {
  if (text.find_first_of(",\n\"") != std::string::npos) {
    fail(errc::bad_config, std::string(what) + " '" + text + "' cannot be rendered in the CSV schema");
  }
}

}  // namespace detail

/// Immutable validated trial cohort. Row order is preserved from the source;
/// downstream clustering tie-breaks depend on it.
class TrialDataset {
 public:
  TrialDataset(std::vector<std::string> factor_names, std::vector<PatientRecord> records)
      : factor_names_(std::move(factor_names)), records_(std::move(records)) {
    const std::size_t m = factor_names_.size();
    if (m == 0) fail(errc::missing_column, "at least one factor column is required");
    for (const auto& name : factor_names_) {
      if (name.empty()) fail(errc::missing_column, "factor column with empty name");
      detail::check_csv_safe(name, "factor name");
    }
    std::unordered_set<std::string_view> seen;
    seen.reserve(records_.size());
    std::size_t n_e = 0, n_c = 0;
    for (const auto& rec : records_) {
      detail::check_csv_safe(rec.id, "patient id");
      if (!seen.insert(rec.id).second) fail(errc::duplicate_id, "patient id '" + rec.id + "' appears twice");
      if (rec.factors.size() != m) {
        fail(errc::ragged_row, "record '" + rec.id + "' has " + std::to_string(rec.factors.size()) +
                                   " factors, expected " + std::to_string(m));
      }
      if (!std::isfinite(rec.cost)) fail(errc::non_finite_value, "cost of '" + rec.id + "' is not finite");
      if (rec.cost < 0.0) fail(errc::negative_cost, "cost of '" + rec.id + "' is negative");
      if (!std::isfinite(rec.effect)) fail(errc::non_finite_value, "effect of '" + rec.id + "' is not finite");
      for (double f : rec.factors) {
        if (!std::isfinite(f)) fail(errc::non_finite_value, "factor of '" + rec.id + "' is not finite");
      }
      (rec.arm == Arm::experimental ? n_e : n_c) += 1;
    }
    if (n_e == 0) fail(errc::empty_arm, "experimental arm has no patients");
    if (n_c == 0) fail(errc::empty_arm, "control arm has no patients");
    n_experimental_ = n_e;
    n_control_ = n_c;
  }

  const std::vector<std::string>& factor_names() const { return factor_names_; }
  const std::vector<PatientRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  std::size_t factor_count() const { return factor_names_.size(); }
  std::size_t experimental_count() const { return n_experimental_; }
  std::size_t control_count() const { return n_control_; }
  std::size_t arm_count(Arm a) const { return a == Arm::experimental ? n_experimental_ : n_control_; }

 private:
  std::vector<std::string> factor_names_;
  std::vector<PatientRecord> records_;
  std::size_t n_experimental_ = 0;
  std::size_t n_control_ = 0;
};

/// Parses the cohort CSV: header `id,arm,cost,effect,<factor...>` (the four
/// fixed columns may appear in any order; every remaining column is a factor).
/// Values use `.` as decimal point, no thousands separators, no quoting.
/// Rows are rejected, never silently dropped.
inline TrialDataset load_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) fail(errc::missing_column, "input has no header row");
  const auto header = detail::split_fields(line);

  constexpr std::size_t kMissing = static_cast<std::size_t>(-1);
  std::size_t col_id = kMissing, col_arm = kMissing, col_cost = kMissing, col_effect = kMissing;
  std::vector<std::pair<std::size_t, std::string>> factor_cols;  // (column index, name)
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string_view name = header[c];
    if (name == "id") {
      if (col_id != kMissing) fail(errc::bad_config, "column 'id' appears twice in header");
      col_id = c;
    } else if (name == "arm") {
      if (col_arm != kMissing) fail(errc::bad_config, "column 'arm' appears twice in header");
      col_arm = c;
    } else if (name == "cost") {
      if (col_cost != kMissing) fail(errc::bad_config, "column 'cost' appears twice in header");
      col_cost = c;
    } else if (name == "effect") {
      if (col_effect != kMissing) fail(errc::bad_config, "column 'effect' appears twice in header");
      col_effect = c;
    } else {
      factor_cols.emplace_back(c, std::string(name));
    }
  }
  if (col_id == kMissing) fail(errc::missing_column, "header lacks column 'id'");
  if (col_arm == kMissing) fail(errc::missing_column, "header lacks column 'arm'");
  if (col_cost == kMissing) fail(errc::missing_column, "header lacks column 'cost'");
  if (col_effect == kMissing) fail(errc::missing_column, "header lacks column 'effect'");
  if (factor_cols.empty()) fail(errc::missing_column, "header has no factor columns");

  std::vector<std::string> factor_names;
  factor_names.reserve(factor_cols.size());
  for (const auto& [idx, name] : factor_cols) factor_names.push_back(name);

  std::vector<PatientRecord> records;
  std::size_t row = 1;  // 1-based data row number for error messages
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;  // tolerate blank lines
    const auto cells = detail::split_fields(line);
    if (cells.size() != header.size()) {
      fail(errc::ragged_row, "row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                                 " cells, expected " + std::to_string(header.size()));
    }
    PatientRecord rec;
    rec.id = std::string(cells[col_id]);
    const auto arm = parse_arm(cells[col_arm]);
    if (!arm) {
      fail(errc::unknown_arm_label,
           "row " + std::to_string(row) + ": unknown arm label '" + std::string(cells[col_arm]) + "'");
    }
    rec.arm = *arm;
    const auto numeric_cell = [&](std::size_t col, const std::string& colname) {
      const auto v = detail::parse_double(cells[col]);
      if (!v) {
        fail(errc::non_numeric_cell, "row " + std::to_string(row) + ", column '" + colname +
                                         "': cannot parse '" + std::string(cells[col]) + "'");
      }
      if (!std::isfinite(*v)) {
        fail(errc::non_finite_value,
             "row " + std::to_string(row) + ", column '" + colname + "': value is not finite");
      }
      return *v;
    };
    rec.cost = numeric_cell(col_cost, "cost");
    if (rec.cost < 0.0) fail(errc::negative_cost, "row " + std::to_string(row) + ": cost is negative");
    rec.effect = numeric_cell(col_effect, "effect");
    rec.factors.reserve(factor_cols.size());
    for (const auto& [idx, name] : factor_cols) rec.factors.push_back(numeric_cell(idx, name));
    records.push_back(std::move(rec));
    ++row;
  }
  return TrialDataset(std::move(factor_names), std::move(records));
}

inline TrialDataset load_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::io_error, "cannot open '" + path + "'");
  return load_dataset(in);
}

/// Writes the canonical schema `id,arm,cost,effect,<factor_1>,...,<factor_m>`.
/// Numbers use the shortest rendering that round-trips, so save/load is exact.
inline void write_csv(const TrialDataset& ds, std::ostream& out) {
  out << "id,arm,cost,effect";
  for (const auto& name : ds.factor_names()) out << ',' << name;
  out << '\n';
  for (const auto& rec : ds.records()) {
    out << rec.id << ',' << to_string(rec.arm) << ',' << detail::format_double(rec.cost) << ','
        << detail::format_double(rec.effect);
    for (double f : rec.factors) out << ',' << detail::format_double(f);
    out << '\n';
  }
}

inline void write_csv_file(const TrialDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(errc::io_error, "cannot write '" + path + "'");
  write_csv(ds, out);
}

/// Row i of the result is record i's factor vector.
inline Eigen::MatrixXd factor_matrix(const TrialDataset& ds) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(ds.size()), static_cast<Eigen::Index>(ds.factor_count()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const auto& f = ds.records()[static_cast<std::size_t>(i)].factors;
    for (Eigen::Index j = 0; j < X.cols(); ++j) X(i, j) = f[static_cast<std::size_t>(j)];
  }
  return X;
}

}  // namespace strata_icer
