#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "frango/field.hpp"

namespace frango {

// Parses an arithmetic expression over named coordinates into a field.
//   numbers, names[k] (coordinate k), pi, + - * / ^, parentheses,
//   exp log sin cos sqrt abs, mono(name, p) = (u - base)^p exactly.
// Non-negative integer powers expand by multiplication, so polynomial input stays an
// exact polynomial. Throws ParseError with the offending column.
ScalarField parse_expression(std::string_view text, const std::vector<std::string>& names,
                             const std::vector<double>& base);

}  // namespace frango
