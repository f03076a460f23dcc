#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace diffpos {

/// Empty cells are written as nothing; doubles use the shortest round-trip
/// representation so output is byte-stable.
using Cell = std::variant<std::monostate, std::int64_t, double, std::string>;

/// Named table with a fixed column schema, written as RFC 4180 CSV.
class ResultTable {
 public:
  ResultTable(std::string name, std::vector<std::string> columns);

  const std::string& name() const { return name_; }
  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<Cell>>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }

  /// Throws std::invalid_argument when the row width does not match.
  void add_row(std::vector<Cell> row);

  std::size_t column_index(const std::string& column) const;

  void write_csv(std::ostream& out) const;
  /// Throws Error(kIo) when the file cannot be written.
  void write_csv(const std::filesystem::path& path) const;

 private:
  std::string name_;
  std::vector<std::string> columns_;
  std::vector<std::vector<Cell>> rows_;
};

std::string format_double(double value);

/// Quotes a field when it contains a comma, quote, CR or LF.
std::string csv_escape(const std::string& field);

}  // namespace diffpos
