#pragma once

#include <string>
#include <vector>

namespace memagent {

// Minimal RFC 4180 reading and writing; fields holding commas, quotes or
// newlines are quoted.
std::string csv_field(const std::string& s);
std::string csv_row(const std::vector<std::string>& fields);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a header column; throws when absent.
  std::size_t column(const std::string& name) const;
};

CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::string& path);

std::string format_double(double v);  // shortest round-trip form

}  // namespace memagent
