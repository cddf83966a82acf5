#pragma once

#include <span>
#include <string>
#include <string_view>

namespace rectflow {

// Compensated sum, order as given.
double neumaier_sum(std::span<const double> xs);

std::string trim(std::string_view s);
// Whole-string strtod; DomainError("parse_error") otherwise.
double parse_double(std::string_view s, std::string_view what);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace rectflow
