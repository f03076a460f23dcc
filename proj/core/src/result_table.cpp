#include "diffpos/result_table.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "diffpos/errors.hpp"

namespace diffpos {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) throw std::runtime_error("to_chars failed");
  return std::string(buf.data(), end);
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

ResultTable::ResultTable(std::string name, std::vector<std::string> columns)
    : name_(std::move(name)), columns_(std::move(columns)) {}

void ResultTable::add_row(std::vector<Cell> row) {
  if (row.size() != columns_.size()) {
    throw std::invalid_argument("row has " + std::to_string(row.size()) + " cells, table " + name_ +
                                " has " + std::to_string(columns_.size()) + " columns");
  }
  rows_.push_back(std::move(row));
}

std::size_t ResultTable::column_index(const std::string& column) const {
  const auto it = std::find(columns_.begin(), columns_.end(), column);
  if (it == columns_.end()) throw std::out_of_range("no column " + column + " in " + name_);
  return static_cast<std::size_t>(it - columns_.begin());
}

void ResultTable::write_csv(std::ostream& out) const {
  auto write_line = [&out](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out << ',';
      out << csv_escape(fields[i]);
    }
    out << "\r\n";
  };
  write_line(columns_);
  std::vector<std::string> fields;
  for (const auto& row : rows_) {
    fields.clear();
    for (const Cell& cell : row) {
      fields.push_back(std::visit(
          [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
              return {};
            } else if constexpr (std::is_same_v<T, std::int64_t>) {
              return std::to_string(v);
            } else if constexpr (std::is_same_v<T, double>) {
              return format_double(v);
            } else {
              return v;
            }
          },
          cell));
    }
    write_line(fields);
  }
}

void ResultTable::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  write_csv(out);
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

}  // namespace diffpos
