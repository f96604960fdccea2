#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace survml {

/// Flat `key = value` configuration. Lines starting with `#` are comments;
/// later keys override earlier ones.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load(const std::filesystem::path& path);

  bool contains(const std::string& key) const { return values_.contains(key); }
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

  std::optional<std::string> get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  std::string require(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_list(const std::string& key) const;

  /// All entries whose key starts with `prefix`, with the prefix stripped.
  std::map<std::string, std::string> with_prefix(const std::string& prefix) const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

std::string trim(const std::string& s);
std::vector<std::string> split_list(const std::string& s, char sep = ',');

}  // namespace survml
