#pragma once

#include <string>
#include <vector>

namespace cvqoc::csv {

/// Header plus numeric rows. Values are written with 17 significant digits,
/// so a write/read cycle reproduces every double exactly.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Index of a named column; throws ConfigError if absent.
  std::size_t column(const std::string& name) const;
  bool has_column(const std::string& name) const;
  std::vector<double> column_values(const std::string& name) const;

  bool operator==(const Table&) const = default;
};

std::string format(const Table& table);
Table parse(const std::string& text);

void write(const std::string& path, const Table& table);
/// Throws ConfigError on unreadable files, ragged rows or non-numeric cells.
Table read(const std::string& path);

}  // namespace cvqoc::csv
