#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "adacgp/types.hpp"

namespace adacgp::csv {

// Shortest text that parses back to exactly the same double (17 significant
// digits when needed).
std::string format_double(double v);

// Splits one CSV line on commas, trimming surrounding whitespace.
std::vector<std::string_view> split(std::string_view line);

// Strict number parsing. `where` is prefixed to the error message.
double parse_double(std::string_view cell, const std::string& where);
long parse_long(std::string_view cell, const std::string& where);

struct Table {
  std::vector<std::vector<double>> rows;
  std::vector<long> line_numbers;  // 1-based source line of each row
};

// Reads numeric rows. Blank lines and lines starting with '#' are skipped.
// Throws ParseError on ragged rows, empty cells or non-numeric values, and
// rejects NaN/inf unless allow_nonfinite is set.
Table read_table(std::istream& is, const std::string& source, bool allow_nonfinite = false);

void write_row(std::ostream& os, const double* values, Index count);

}  // namespace adacgp::csv
