#pragma once

#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

namespace predepth {

// Fixed float formatting shared by every CSV and the manifest: %.17g for
// doubles and %.9g for 32-bit floats round-trip exactly, so re-deriving a
// table from stored artifacts reproduces it byte for byte.
inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fmt_float(float v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
  return buf;
}

class CsvWriter {
 public:
  void header(const std::string& line) { out_ << line << '\n'; }

  CsvWriter& field(const std::string& s) {
    if (!first_) out_ << ',';
    out_ << s;
    first_ = false;
    return *this;
  }
  CsvWriter& field(const char* s) { return field(std::string(s)); }
  CsvWriter& field(std::int64_t v) { return field(std::to_string(v)); }
  CsvWriter& field(int v) { return field(std::to_string(v)); }
  CsvWriter& field(double v) { return field(fmt_double(v)); }
  CsvWriter& field(float v) { return field(fmt_float(v)); }
  // An empty cell marks an undefined/flagged value.
  CsvWriter& empty() { return field(std::string()); }

  void end_row() {
    out_ << '\n';
    first_ = true;
  }

  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
  bool first_ = true;
};

std::vector<std::string> split_csv_line(const std::string& line);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  int column(const std::string& name) const;  // throws if absent
};

CsvTable read_csv(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace predepth
