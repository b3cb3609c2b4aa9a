#pragma once

#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace lowrank {

/// Shortest decimal text that round-trips to the same double.
std::string format_number(double value);

/// Quotes a field when it contains a comma, quote, CR or LF.
std::string csv_escape(std::string_view field);

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  void row(std::initializer_list<std::string> fields);
  void row(const std::vector<std::string>& fields);

 private:
  template <typename It>
  void write(It first, It last);

  std::ostream& os_;
};

/// Splits one CSV record into fields, honouring quoted fields.
std::vector<std::string> parse_csv_line(std::string_view line);

}  // namespace lowrank
