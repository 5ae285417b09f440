#pragma once

#include <ostream>
#include <string>

namespace luenid::cli {

/// 17 significant digits: round-trips any double.
std::string format_number(double value);

class CsvRow {
 public:
  explicit CsvRow(std::ostream& out) : out_(out) {}
  ~CsvRow() { out_ << '\n'; }

  CsvRow& operator<<(double value);
  CsvRow& operator<<(const std::string& text);

 private:
  void separator();

  std::ostream& out_;
  bool first_ = true;
};

}  // namespace luenid::cli
