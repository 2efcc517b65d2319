#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace sedbox::detail {

// Fixed-point formatting used for every number the tools write, so that
// identical runs produce byte-identical files.
std::string format_fixed(double value, int decimals);

std::vector<std::string> split(std::string_view text, char delimiter);

std::string_view trim(std::string_view text);

// Parse helpers that throw ValidationError mentioning the given context
// (typically "file:line column") on failure.
double parse_double(std::string_view text, const std::string& context);
long parse_long(std::string_view text, const std::string& context);

}  // namespace sedbox::detail
