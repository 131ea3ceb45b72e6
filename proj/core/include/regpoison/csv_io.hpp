#pragma once

#include "regpoison/dataset.hpp"

#include <filesystem>
#include <string>
#include <variant>

namespace regpoison {

/// Target column chosen by header name or zero-based column index.
using TargetColumn = std::variant<std::string, std::size_t>;

/// Parses "3" as an index and anything else as a column name.
TargetColumn parse_target_column(const std::string& text);

/// Reads a comma-separated file with a header row. Columns in which fewer
/// than half the cells parse as numbers are treated as non-numeric and
/// skipped; any remaining row with an unparseable or non-finite cell is
/// dropped and counted in `dropped_rows`.
RawDataset load_csv(const std::filesystem::path& path, const TargetColumn& target);

/// Writes features then target, one row per line, round-trip precision.
void write_csv(const std::filesystem::path& path, const Eigen::MatrixXd& features,
               const Eigen::VectorXd& targets, const std::vector<std::string>& column_names);

void write_csv(const std::filesystem::path& path, const Dataset& data);

/// Sidecar path used next to every CSV this library writes.
std::filesystem::path sidecar_path(const std::filesystem::path& csv);

}  // namespace regpoison
