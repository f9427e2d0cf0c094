#include "stepwise/csv.hpp"

#include <cmath>
#include <cstdio>

namespace stepwise {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

}  // namespace stepwise
