#pragma once

#include <string>
#include <vector>

namespace stabclust {

// Minimal strict CSV table. Quoted fields ("", embedded commas/newlines)
// are supported on read; rows must match the header width.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // -1 when absent
  int column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);
CsvTable read_csv_text(const std::string& text, const std::string& origin);

std::string csv_escape(const std::string& field);
void write_csv(const std::string& path, const CsvTable& table);

}  // namespace stabclust
