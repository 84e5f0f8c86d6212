#ifndef VARLIN_CSV_HPP
#define VARLIN_CSV_HPP

#include <charconv>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "varlin/errors.hpp"

namespace varlin {

// Shortest round-trip decimal rendering, locale independent.  Keeps CSV
// output byte-identical across runs and machines.
inline std::string fmt_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string fmt_int(long long v) {
  char buf[24];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& header) : out_(path) {
    if (!out_) throw ConfigError("cannot open output file: " + path);
    out_ << header << "\n";
  }
  void row(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ",";
      out_ << cells[i];
    }
    out_ << "\n";
  }

 private:
  std::ofstream out_;
};

inline double parse_double(const std::string& s) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  double v = 0;
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc()) throw ConfigError("bad numeric literal: '" + s + "'");
  return v;
}

inline long long parse_int(const std::string& s) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  long long v = 0;
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc()) throw ConfigError("bad integer literal: '" + s + "'");
  return v;
}

}  // namespace varlin

#endif
