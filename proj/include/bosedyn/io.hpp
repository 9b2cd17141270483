#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace bose {

// Shortest decimal that round-trips; "nan"/"inf"/"-inf" for non-finite values.
std::string format_number(double x);

std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t x);

// Write to a sibling temporary and rename over the target.
void write_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

class CsvTable {
public:
  explicit CsvTable(std::vector<std::string> columns);
  void add_row(const std::vector<double>& row);
  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t rows() const { return rows_.size(); }
  std::string str() const;

private:
  std::vector<std::string> columns_;
  std::vector<std::vector<double>> rows_;
};

}  // namespace bose
