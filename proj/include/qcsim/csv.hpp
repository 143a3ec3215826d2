#pragma once

#include <string>
#include <vector>

namespace qcsim::csv {

/// Shortest representation that round-trips a double bit-exactly.
std::string format_double(double v);

std::vector<std::string> split(const std::string& line, char delim = ',');

/// Parse helpers that throw ParseError naming the offending context.
double parse_double(const std::string& token, const std::string& context);
long long parse_int(const std::string& token, const std::string& context);

std::string trim(const std::string& s);

}  // namespace qcsim::csv
