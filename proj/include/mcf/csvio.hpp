#pragma once

// CSV / text output helpers: comma separator, '.' decimal point, 17
// significant digits, atomic writes (temp file + rename).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcf {

inline std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("write_file_atomic: cannot open " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write_file_atomic: write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : cols_(header.size()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) body_ << ',';
      body_ << header[i];
    }
    body_ << '\n';
  }

  CsvTable& cell(const std::string& s) {
    if (col_) body_ << ',';
    body_ << s;
    advance();
    return *this;
  }
  CsvTable& cell(double v) { return cell(csv_num(v)); }
  CsvTable& cell(long v) { return cell(std::to_string(v)); }

  void write(const std::string& path) const {
    if (col_ != 0) throw std::logic_error("CsvTable: unfinished row");
    write_file_atomic(path, body_.str());
  }

 private:
  void advance() {
    if (++col_ == cols_) {
      body_ << '\n';
      col_ = 0;
    }
  }
  std::size_t cols_, col_ = 0;
  std::ostringstream body_;
};

}  // namespace mcf
