#pragma once

#include "folomin/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace folomin::io {

/// Shortest-round-trip-safe text: 17 significant digits.
std::string format_double(double x);

struct CsvTable {
  std::vector<std::string> header;
  Matrix values;
};

/// Comma-separated numeric table with a header row. Ragged rows and cells
/// that are not finite numbers raise DataError naming the 1-based line and
/// column.
CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text, const std::string& source = "<input>");

/// Writes header + rows. An empty header is replaced by V1..Vk.
void write_csv(const std::string& path, const Matrix& M,
               std::vector<std::string> header = {});
std::string to_csv(const Matrix& M, std::vector<std::string> header = {});

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

/// 64-bit FNV-1a digest as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace folomin::io
