#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace hjprox::csv {

/// Shortest decimal that parses back to the same double. Non-finite values
/// print as `inf`, `-inf`, `nan`.
std::string format(double v);

/// Inverse of format(); throws InvalidArgument on garbage.
double parse_double(std::string_view s);
long long parse_int(std::string_view s);

std::vector<std::string_view> split(std::string_view line, char sep = ',');

/// Joins already-formatted fields with commas and a trailing newline.
void write_row(std::ostream& os, const std::vector<std::string>& fields);
void write_row(std::ostream& os, const std::vector<double>& values);

}  // namespace hjprox::csv
