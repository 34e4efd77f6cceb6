#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace chemo::cli {

/// printf %.17g, with nan/inf spelled out.
std::string format_real(double x);

/// Writes a header row on construction and comma-separated rows after.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);

  CsvWriter& cell(double x);
  CsvWriter& cell(long long x);
  CsvWriter& cell(int x) { return cell(static_cast<long long>(x)); }
  CsvWriter& cell(long x) { return cell(static_cast<long long>(x)); }
  CsvWriter& cell(unsigned long long x);
  CsvWriter& cell(bool x);
  CsvWriter& cell(const std::string& text);
  CsvWriter& cell(const char* text) { return cell(std::string(text)); }
  CsvWriter& empty();
  /// Ends the row; throws if the cell count differs from the header.
  void end_row();

 private:
  void put(const std::string& text);

  std::ofstream out_;
  std::string path_;
  std::size_t columns_;
  std::size_t in_row_ = 0;
};

/// Reads a CSV written by CsvWriter (no quoting) into rows of strings; the
/// header is the first row.
std::vector<std::vector<std::string>> read_csv(const std::string& path);

}  // namespace chemo::cli
