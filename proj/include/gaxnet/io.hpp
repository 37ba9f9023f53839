#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace gaxnet::io {

/// 17 significant digits: parses back to the identical double.
std::string format_double(double v);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);
void ensure_dir(const std::filesystem::path& dir);

using CsvRow = std::vector<std::string>;

struct CsvTable {
  CsvRow header;
  std::vector<CsvRow> rows;

  std::size_t column(const std::string& name) const;
};

std::string to_csv(const CsvTable& table);
CsvTable parse_csv(const std::string& text);

/// 64-bit FNV-1a as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& data);

}  // namespace gaxnet::io
