#include "qcsim/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <stdexcept>

#include "qcsim/errors.hpp"

namespace qcsim::csv {

std::string format_double(double v) {
  char buf[40];
  // %.17g always round-trips; prefer the shorter form when it does too.
  std::snprintf(buf, sizeof buf, "%.15g", v);
  if (std::strtod(buf, nullptr) == v) return buf;
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == delim) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& token, const std::string& context) {
  const char* begin = token.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') {
    throw ParseError("expected a number for " + context + ", got '" + token + "'");
  }
  return v;
}

long long parse_int(const std::string& token, const std::string& context) {
  const char* begin = token.c_str();
  char* end = nullptr;
  long long v = std::strtoll(begin, &end, 10);
  if (end == begin || *end != '\0') {
    throw ParseError("expected an integer for " + context + ", got '" + token + "'");
  }
  return v;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace qcsim::csv
