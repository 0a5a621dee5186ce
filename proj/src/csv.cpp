#include "stabclust/csv.hpp"

#include <fstream>
#include <sstream>

#include "stabclust/common.hpp"

namespace stabclust {

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

namespace {

// Parses one record starting at `pos`; advances past the trailing newline.
// Returns false at end of input.
bool parse_record(const std::string& text, std::size_t& pos,
                  std::vector<std::string>& out, std::size_t& line_no) {
  if (pos >= text.size()) return false;
  out.clear();
  std::string field;
  bool quoted = false;
  while (pos < text.size()) {
    char c = text[pos];
    if (quoted) {
      if (c == '"') {
        if (pos + 1 < text.size() && text[pos + 1] == '"') {
          field.push_back('"');
          pos += 2;
        } else {
          quoted = false;
          ++pos;
        }
      } else {
        if (c == '\n') ++line_no;
        field.push_back(c);
        ++pos;
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        ++pos;
        break;
      case ',':
        out.push_back(std::move(field));
        field.clear();
        ++pos;
        break;
      case '\r':
        ++pos;
        break;
      case '\n':
        ++pos;
        ++line_no;
        out.push_back(std::move(field));
        return true;
      default:
        field.push_back(c);
        ++pos;
    }
  }
  out.push_back(std::move(field));
  return true;
}

}  // namespace

CsvTable read_csv_text(const std::string& text, const std::string& origin) {
  CsvTable table;
  std::size_t pos = 0;
  std::size_t line_no = 1;
  std::vector<std::string> record;
  if (!parse_record(text, pos, record, line_no)) {
    throw DataError(origin + ": empty CSV input");
  }
  table.header = record;
  while (true) {
    std::size_t row_line = line_no;
    if (!parse_record(text, pos, record, line_no)) break;
    if (record.size() == 1 && record[0].empty() && pos >= text.size()) break;  // trailing newline
    if (record.size() != table.header.size()) {
      throw DataError(origin + ": row at line " + std::to_string(row_line) + " has " +
                      std::to_string(record.size()) + " fields, expected " +
                      std::to_string(table.header.size()));
    }
    table.rows.push_back(record);
  }
  return table;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return read_csv_text(buf.str(), path);
}

std::string csv_escape(const std::string& field) {
  bool needs_quote = field.find_first_of(",\"\n\r") != std::string::npos;
  if (!needs_quote) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open file for writing: " + path);
  auto write_row = [&out](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << csv_escape(row[i]);
    }
    out << '\n';
  };
  write_row(table.header);
  for (const auto& row : table.rows) write_row(row);
}

}  // namespace stabclust
