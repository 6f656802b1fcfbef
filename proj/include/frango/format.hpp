#pragma once

#include <string>

namespace frango {

// 12 significant digits, "nan"/"inf" spelled out, -0 printed as 0.
std::string format_number(double v);

}  // namespace frango
