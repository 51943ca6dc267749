#pragma once

// Minimal CSV reading/writing. Fields never contain commas in any of the
// formats this project emits, so no quoting is implemented.

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "scr/common.hpp"

namespace scr::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  }
};

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline Table read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path);
  Table t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    auto fields = split_line(line);
    if (lineno == 1) {
      t.header = std::move(fields);
    } else {
      if (fields.size() != t.header.size())
        throw CsvParseError("expected " + std::to_string(t.header.size()) +
                                " fields, got " + std::to_string(fields.size()),
                            lineno);
      t.rows.push_back(std::move(fields));
    }
  }
  if (t.header.empty()) throw ValidationError("empty csv file: " + path);
  return t;
}

inline double parse_double(const std::string& s, std::size_t lineno) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw CsvParseError("malformed number '" + s + "'", lineno);
  return v;
}

inline long parse_int(const std::string& s, std::size_t lineno) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw CsvParseError("malformed integer '" + s + "'", lineno);
  return v;
}

// Round-trip exact formatting for doubles.
inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path) {
    if (!out_) throw ValidationError("cannot open file for writing: " + path);
  }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << fields[i];
    }
    out_ << '\n';
  }

  std::ofstream& stream() { return out_; }

 private:
  std::ofstream out_;
};

}  // namespace scr::csv
