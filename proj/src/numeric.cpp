#include "rectflow/numeric.hpp"

#include <fmt/format.h>

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "rectflow/errors.hpp"

namespace rectflow {

double neumaier_sum(std::span<const double> xs) {
  double s = 0.0, c = 0.0;
  for (double x : xs) {
    double t = s + x;
    if (std::abs(s) >= std::abs(x))
      c += (s - t) + x;
    else
      c += (x - t) + s;
    s = t;
  }
  return s + c;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(std::string_view s, std::string_view what) {
  std::string t = trim(s);
  if (t.empty()) throw DomainError("parse_error", fmt::format("empty {}", what));
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || errno == ERANGE)
    throw DomainError("parse_error", fmt::format("cannot parse {} from '{}'", what, t));
  return v;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("io_error", fmt::format("cannot open '{}'", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("io_error", fmt::format("cannot write '{}'", path));
  out << text;
  if (!out) throw DomainError("io_error", fmt::format("write to '{}' failed", path));
}

}  // namespace rectflow
