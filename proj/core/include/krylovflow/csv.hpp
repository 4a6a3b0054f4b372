#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace krylovflow {

/// Shortest-round-trip-safe text form: 17 significant digits, '.' decimal
/// point, "nan"/"inf"/"-inf" for non-finite values. Locale independent.
std::string format_double(double value);

/// Accepts the output of format_double (and any strtod-style number).
double parse_double(const std::string& text);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by header name; throws if absent.
  std::size_t column(const std::string& name) const;
};

/// Plain comma-separated text, no quoting. Every row must have the header's
/// column count.
CsvTable read_csv(std::istream& in);

/// Writes header and rows of doubles with LF line endings.
void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& columns);

}  // namespace krylovflow
