#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace survml::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column, or -1.
  int find(const std::string& name) const;
};

/// RFC 4180 reader: comma separated, double-quoted fields with "" escapes.
/// A UTF-8 byte-order mark on the header is dropped.
Table parse(const std::string& text);
Table read(const std::filesystem::path& path);

std::string escape(const std::string& field);
std::string join_row(const std::vector<std::string>& fields);

/// Shortest round-trip decimal representation of a double.
std::string format_double(double v);

}  // namespace survml::csv
