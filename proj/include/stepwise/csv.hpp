#pragma once

#include <string>

namespace stepwise {

/// 12 significant digits; "inf", "-inf" and "nan" for non-finite values.
std::string format_number(double value);

inline const char* format_bool(bool value) noexcept { return value ? "true" : "false"; }

}  // namespace stepwise
