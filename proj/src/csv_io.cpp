#include "adacgp/csv_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>

namespace adacgp::csv {

std::string format_double(double v) {
  char buf[32];
  // %.17g always round-trips; try shorter first for readability.
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string_view cell = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r'))
      cell.remove_suffix(1);
    out.push_back(cell);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_double(std::string_view cell, const std::string& where) {
  if (cell.empty()) throw ParseError(where + ": empty cell");
  std::string tmp(cell);
  char* end = nullptr;
  const double v = std::strtod(tmp.c_str(), &end);
  if (end == tmp.c_str() || *end != '\0') throw ParseError(where + ": not a number '" + tmp + "'");
  return v;
}

long parse_long(std::string_view cell, const std::string& where) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size())
    throw ParseError(where + ": not an integer '" + std::string(cell) + "'");
  return v;
}

Table read_table(std::istream& is, const std::string& source, bool allow_nonfinite) {
  Table t;
  std::string line;
  long lineno = 0;
  std::size_t width = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string_view sv(line);
    while (!sv.empty() && (sv.back() == '\r' || sv.back() == ' ')) sv.remove_suffix(1);
    if (sv.empty() || sv.front() == '#') continue;
    const auto cells = split(sv);
    const std::string where = source + ":" + std::to_string(lineno);
    if (width == 0) {
      width = cells.size();
    } else if (cells.size() != width) {
      throw ParseError(where + ": expected " + std::to_string(width) + " columns, found " +
                       std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const double v = parse_double(cells[c], where + " column " + std::to_string(c + 1));
      if (!allow_nonfinite && !std::isfinite(v))
        throw ParseError(where + " column " + std::to_string(c + 1) + ": non-finite value");
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
    t.line_numbers.push_back(lineno);
  }
  return t;
}

void write_row(std::ostream& os, const double* values, Index count) {
  for (Index i = 0; i < count; ++i) {
    if (i) os << ',';
    os << format_double(values[i]);
  }
  os << '\n';
}

}  // namespace adacgp::csv
