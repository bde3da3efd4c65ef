#pragma once

#include <string>
#include <vector>

namespace starwave {

/// Numeric CSV with a header row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Index of a header column; throws InputError naming the file if absent.
  std::size_t column(const std::string& name) const;
  std::vector<double> column_values(const std::string& name) const;

  std::string source;
};

CsvTable read_csv(const std::string& path);

}  // namespace starwave
