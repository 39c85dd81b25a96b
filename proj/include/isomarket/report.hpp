#pragma once

// Run reports and CSV emission. Output is plain text with '.' decimals,
// '\n' line endings and 17-significant-digit floats so that identical runs
// produce byte-identical files.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace isomarket::report {

std::string format_float(double v);

struct ResultRow {
  std::string name;
  double value = 0.0;
  std::optional<double> tol_or_se;
  std::optional<bool> pass;
};

struct RunReport {
  std::string command;
  std::uint64_t config_hash = 0;
  std::vector<ResultRow> rows;
  std::vector<std::string> emitted_files;

  void add(std::string name, double value) {
    rows.push_back({std::move(name), value, std::nullopt, std::nullopt});
  }
  void add(std::string name, double value, double tol_or_se, bool pass) {
    rows.push_back({std::move(name), value, tol_or_se, pass});
  }

  bool all_passed() const;
  std::string to_csv() const;
};

std::string series_csv(const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& columns);

void write_file(const std::string& path, const std::string& content);

}  // namespace isomarket::report
