#include "regpoison/csv_io.hpp"

#include "regpoison/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

namespace regpoison {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      cells.emplace_back(trim(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  cells.emplace_back(trim(cell));
  return cells;
}

std::optional<double> parse_number(std::string_view text) {
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return value;
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return ec == std::errc{} ? std::string(buf, ptr) : std::to_string(v);
}

}  // namespace

TargetColumn parse_target_column(const std::string& text) {
  if (!text.empty() && text.find_first_not_of("0123456789") == std::string::npos) {
    return static_cast<std::size_t>(std::stoull(text));
  }
  return text;
}

RawDataset load_csv(const std::filesystem::path& path, const TargetColumn& target) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::MissingFile, "cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::EmptyAfterFiltering, path.string() + " has no header row");
  const auto header = split_line(line);

  std::size_t target_index = 0;
  if (const auto* name = std::get_if<std::string>(&target)) {
    const auto it = std::find(header.begin(), header.end(), *name);
    if (it == header.end()) fail(ErrorCode::MissingTargetColumn, "no column named '" + *name + "'");
    target_index = static_cast<std::size_t>(it - header.begin());
  } else {
    target_index = std::get<std::size_t>(target);
    if (target_index >= header.size()) {
      fail(ErrorCode::MissingTargetColumn, "target index " + std::to_string(target_index) + " out of range");
    }
  }

  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    rows.push_back(split_line(line));
  }

  // Column typing: a column is numeric when at least half its cells parse.
  std::vector<std::size_t> parsed(header.size(), 0);
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < header.size() && j < row.size(); ++j) {
      if (parse_number(row[j])) ++parsed[j];
    }
  }
  std::vector<std::size_t> feature_columns;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j != target_index && !rows.empty() && 2 * parsed[j] >= rows.size()) feature_columns.push_back(j);
  }

  RawDataset raw;
  raw.name = path.stem().string();
  for (std::size_t j : feature_columns) raw.column_names.push_back(header[j]);
  raw.column_names.push_back(header[target_index]);

  std::vector<double> values;
  std::vector<double> targets;
  values.reserve(rows.size() * feature_columns.size());
  for (const auto& row : rows) {
    if (row.size() != header.size()) {
      ++raw.dropped_rows;
      continue;
    }
    const auto y = parse_number(row[target_index]);
    bool ok = y && std::isfinite(*y);
    std::vector<double> x;
    x.reserve(feature_columns.size());
    for (std::size_t j : feature_columns) {
      if (!ok) break;
      const auto v = parse_number(row[j]);
      ok = v && std::isfinite(*v);
      if (ok) x.push_back(*v);
    }
    if (!ok) {
      ++raw.dropped_rows;
      continue;
    }
    values.insert(values.end(), x.begin(), x.end());
    targets.push_back(*y);
  }
  if (targets.empty()) fail(ErrorCode::EmptyAfterFiltering, "no usable rows in " + path.string());
  if (feature_columns.empty()) fail(ErrorCode::EmptyAfterFiltering, "no numeric feature columns in " + path.string());

  const auto n = static_cast<Eigen::Index>(targets.size());
  const auto d = static_cast<Eigen::Index>(feature_columns.size());
  raw.features = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), n, d);
  raw.targets = Eigen::Map<const Eigen::VectorXd>(targets.data(), n);
  return raw;
}

void write_csv(const std::filesystem::path& path, const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
               const std::vector<std::string>& column_names) {
  if (features.rows() != targets.size()) fail(ErrorCode::DimensionMismatch, "rows and targets differ");
  if (column_names.size() != static_cast<std::size_t>(features.cols()) + 1) {
    fail(ErrorCode::DimensionMismatch, "column name count must be d + 1");
  }
  std::ofstream out(path);
  if (!out) fail(ErrorCode::MissingFile, "cannot write " + path.string());
  for (std::size_t j = 0; j < column_names.size(); ++j) out << (j ? "," : "") << column_names[j];
  out << '\n';
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    for (Eigen::Index j = 0; j < features.cols(); ++j) out << format_double(features(i, j)) << ',';
    out << format_double(targets[i]) << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const Dataset& data) {
  auto names = data.column_names;
  if (names.size() != data.dims() + 1) names = make_dataset(Eigen::MatrixXd(0, data.features.cols()), {}).column_names;
  write_csv(path, data.features, data.targets, names);
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  auto p = csv;
  p += ".meta.json";
  return p;
}

}  // namespace regpoison
