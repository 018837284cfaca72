#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace qas::csv {

// Splits one CSV record. Supports double-quoted fields with "" escapes; no
// embedded newlines.
std::vector<std::string> split_line(std::string_view line);

// Quotes a field only when it contains a comma, quote or newline.
std::string escape(std::string_view field);

// Shortest round-trip decimal representation of a double.
std::string format_double(double value);

// Strict numeric field parsing; throws MalformedInput tagged with `where`.
double to_double(const std::string& field, const std::string& where);
std::size_t to_count(const std::string& field, const std::string& where);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row

  // Column position by case-insensitive name, or -1.
  int column(std::string_view name) const;
};

// Parses a header + rows document; blank lines are skipped. Throws
// MalformedInput when a row has a different field count than the header.
Table parse(std::string_view text);

}  // namespace qas::csv
