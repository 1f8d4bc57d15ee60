#pragma once

// Minimal locale-independent CSV reading/writing for the three input tables.
// Fields are comma-separated without quoting; empty cells are preserved.

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "tripgrav/error.hpp"

namespace tripgrav::csv {

struct Table {
  std::string path;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  /// 1-based line number of each row in the source file.
  std::vector<std::size_t> lines;

  /// Column position by name; throws a schema error naming the column when absent.
  std::size_t column(std::string_view name, std::string_view module) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw Error(std::string(module), ErrorKind::schema,
                path + ": missing required column '" + std::string(name) + "'");
  }
};

inline std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    std::string_view cell = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
    out.emplace_back(cell);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline Table read(const std::string& path, std::string_view module) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(std::string(module), ErrorKind::io, "cannot open '" + path + "'");
  Table table;
  table.path = path;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (line.empty()) continue;
    if (!have_header) {
      table.header = split(line);
      have_header = true;
      continue;
    }
    auto cells = split(line);
    if (cells.size() != table.header.size())
      throw Error(std::string(module), ErrorKind::parse,
                  path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(table.header.size()) + " cells, found " +
                      std::to_string(cells.size()));
    table.rows.push_back(std::move(cells));
    table.lines.push_back(line_no);
  }
  if (!have_header) throw Error(std::string(module), ErrorKind::schema, path + ": empty file");
  return table;
}

/// Parses a dot-decimal real; throws a parse error naming row and column.
inline double parse_double(std::string_view cell, const Table& t, std::size_t row, std::size_t col,
                           std::string_view module) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (cell.empty() || ec != std::errc{} || ptr != last || !std::isfinite(value))
    throw Error(std::string(module), ErrorKind::parse,
                t.path + ":" + std::to_string(t.lines[row]) + ": column '" + t.header[col] +
                    "': not a number: '" + std::string(cell) + "'");
  return value;
}

/// Shortest representation that round-trips exactly.
inline std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline void write_file(const std::string& path, const std::string& content, std::string_view module) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(std::string(module), ErrorKind::io, "cannot write '" + path + "'");
  out << content;
  if (!out) throw Error(std::string(module), ErrorKind::io, "write failed for '" + path + "'");
}

}  // namespace tripgrav::csv
