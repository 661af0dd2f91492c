#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "coneglm/types.hpp"

namespace coneglm {

// A loaded table: each column is numeric or text (text columns are treated
// as categorical downstream).
struct DataColumn {
  std::string name;
  bool is_numeric = true;
  std::vector<double> num;
  std::vector<std::string> text;

  size_t size() const { return is_numeric ? num.size() : text.size(); }
};

struct DataTable {
  std::vector<DataColumn> columns;
  size_t n_rows = 0;

  const DataColumn& column(const std::string& name) const {
    for (const auto& c : columns)
      if (c.name == name) return c;
    throw InputError("no column named '" + name + "' in the data");
  }
  bool has_column(const std::string& name) const {
    for (const auto& c : columns)
      if (c.name == name) return true;
    return false;
  }
  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& c : columns) out.push_back(c.name);
    return out;
  }
};

namespace csv_detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(cur);
  return fields;
}

inline bool parse_number(const std::string& s, double* out) {
  if (s.empty()) return false;
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto res = std::from_chars(begin, end, *out);
  return res.ec == std::errc() && res.ptr == end;
}

}  // namespace csv_detail

// Comma-separated, header row required, "." decimal separator. Text columns
// are inferred as categorical. NA cells are rejected.
inline DataTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw InputError("'" + path + "' is empty");
  DataTable table;
  for (auto& h : csv_detail::split_csv_line(line)) {
    DataColumn c;
    c.name = h;
    table.columns.push_back(std::move(c));
  }
  std::vector<std::vector<std::string>> raw(table.columns.size());
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = csv_detail::split_csv_line(line);
    if (fields.size() != table.columns.size())
      throw InputError(path + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(table.columns.size()) + " fields, got " +
                       std::to_string(fields.size()));
    for (size_t j = 0; j < fields.size(); ++j) {
      if (fields[j] == "NA")
        throw InputError(path + ":" + std::to_string(line_no) +
                         ": NA value in column '" + table.columns[j].name +
                         "' (drop incomplete rows before fitting)");
      raw[j].push_back(fields[j]);
    }
    ++table.n_rows;
  }
  for (size_t j = 0; j < table.columns.size(); ++j) {
    auto& col = table.columns[j];
    col.is_numeric = !raw[j].empty();
    std::vector<double> nums;
    nums.reserve(raw[j].size());
    for (const auto& s : raw[j]) {
      double v;
      if (!csv_detail::parse_number(s, &v)) {
        col.is_numeric = false;
        break;
      }
      nums.push_back(v);
    }
    if (col.is_numeric) col.num = std::move(nums);
    else col.text = std::move(raw[j]);
  }
  return table;
}

inline void write_csv(const DataTable& table, std::ostream& out) {
  for (size_t j = 0; j < table.columns.size(); ++j)
    out << (j ? "," : "") << table.columns[j].name;
  out << "\n";
  for (size_t i = 0; i < table.n_rows; ++i) {
    for (size_t j = 0; j < table.columns.size(); ++j) {
      if (j) out << ",";
      const auto& c = table.columns[j];
      if (c.is_numeric) {
        char buf[32];
        auto res = std::to_chars(buf, buf + sizeof(buf), c.num[i]);
        out.write(buf, res.ptr - buf);
      } else {
        out << c.text[i];
      }
    }
    out << "\n";
  }
}

inline void write_csv(const DataTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  write_csv(table, out);
}

}  // namespace coneglm
