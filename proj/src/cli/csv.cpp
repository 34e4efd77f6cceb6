#include "chemo/cli/csv.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace chemo::cli {

std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path), path_(path), columns_(header.size()) {
  if (!out_) throw std::runtime_error("cannot write " + path);
  for (const auto& h : header) put(h);
  end_row();
}

void CsvWriter::put(const std::string& text) {
  if (in_row_ > 0) out_ << ',';
  out_ << text;
  ++in_row_;
}

CsvWriter& CsvWriter::cell(double x) {
  put(format_real(x));
  return *this;
}

CsvWriter& CsvWriter::cell(long long x) {
  put(std::to_string(x));
  return *this;
}

CsvWriter& CsvWriter::cell(unsigned long long x) {
  put(std::to_string(x));
  return *this;
}

CsvWriter& CsvWriter::cell(bool x) {
  put(x ? "1" : "0");
  return *this;
}

CsvWriter& CsvWriter::cell(const std::string& text) {
  if (text.find_first_of(",\n\"") != std::string::npos)
    throw std::invalid_argument("csv cell may not contain commas, quotes or newlines: " + text);
  put(text);
  return *this;
}

CsvWriter& CsvWriter::empty() {
  put("");
  return *this;
}

void CsvWriter::end_row() {
  if (in_row_ != columns_)
    throw std::logic_error(path_ + ": row has " + std::to_string(in_row_) + " cells, expected " +
                           std::to_string(columns_));
  out_ << '\n';
  in_row_ = 0;
  if (!out_) throw std::runtime_error("write failed: " + path_);
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(cell);
    if (!line.empty() && line.back() == ',') row.emplace_back();
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace chemo::cli
