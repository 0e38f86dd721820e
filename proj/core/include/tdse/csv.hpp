#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace tdse::csv {

/// Splits one comma-separated line (no quoting support; none of the schemas
/// need it). Strips a trailing carriage return.
std::vector<std::string> split(std::string_view line, char sep = ',');

std::string trim(std::string_view s);

/// Parses a finite double, throwing Error(MalformedRow) naming `context`.
double parse_double(std::string_view s, const std::string& context);

/// Shortest representation that round-trips exactly.
std::string format_double(double v);

bool getline(std::istream& in, std::string& line);

}  // namespace tdse::csv
