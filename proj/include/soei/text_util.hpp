#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace soei::text {

std::string to_lower_ascii(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool istarts_with(std::string_view s, std::string_view prefix);
std::string_view trim(std::string_view s);
// Splits on '\n', dropping a trailing '\r' from each line.
std::vector<std::string_view> split_lines(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
// Collapses runs of ASCII whitespace, hyphens and underscores to one space.
std::string normalize_label(std::string_view s);
// Trims and drops "**" emphasis and a leading "- " or "* " bullet.
std::string strip_markdown(std::string_view line);

}  // namespace soei::text
