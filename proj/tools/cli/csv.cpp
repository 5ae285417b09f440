#include "cli/csv.hpp"

#include <cmath>
#include <cstdio>

namespace luenid::cli {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

void CsvRow::separator() {
  if (!first_) out_ << ',';
  first_ = false;
}

CsvRow& CsvRow::operator<<(double value) {
  separator();
  out_ << format_number(value);
  return *this;
}

CsvRow& CsvRow::operator<<(const std::string& text) {
  separator();
  out_ << text;
  return *this;
}

}  // namespace luenid::cli
