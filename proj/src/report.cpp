#include "isomarket/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "isomarket/common.hpp"

namespace isomarket::report {

std::string format_float(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

bool RunReport::all_passed() const {
  for (const auto& row : rows)
    if (row.pass.has_value() && !*row.pass) return false;
  return true;
}

std::string RunReport::to_csv() const {
  std::ostringstream os;
  os << "# command: " << command << "\n";
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(config_hash));
  os << "# config_hash: " << hash << "\n";
  os << "name,value,tol_or_se,status\n";
  for (const auto& row : rows) {
    os << row.name << "," << format_float(row.value) << ",";
    if (row.tol_or_se) os << format_float(*row.tol_or_se);
    os << ",";
    if (row.pass)
      os << (*row.pass ? "pass" : "fail");
    else
      os << "-";
    os << "\n";
  }
  for (const auto& f : emitted_files) os << "# file: " << f << "\n";
  return os.str();
}

std::string series_csv(const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& columns) {
  if (header.size() != columns.size())
    throw InvalidInput("series_csv: header/column mismatch");
  std::ostringstream os;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c) os << ",";
    os << header[c];
  }
  os << "\n";
  const std::size_t rows = columns.empty() ? 0 : columns.front().size();
  for (const auto& col : columns)
    if (col.size() != rows) throw InvalidInput("series_csv: ragged columns");
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) os << ",";
      os << format_float(columns[c][r]);
    }
    os << "\n";
  }
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot open output file: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

}  // namespace isomarket::report
