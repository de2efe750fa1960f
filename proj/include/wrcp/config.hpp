#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace wrcp {

/// Flat `key = value` configuration file. `#` starts a comment, blank lines
/// are skipped. Every key must be consumed by a typed getter; leftover keys
/// make check_consumed() fail, so misspelled options surface immediately.
/// A `schema_version = 1` entry is mandatory.
class ConfigMap {
public:
  static ConfigMap parse(const std::string& text, const std::string& origin);
  static ConfigMap load(const std::string& path);

  bool has(const std::string& key) const;

  std::string get_string(const std::string& key);
  std::string get_string(const std::string& key, const std::string& fallback);
  double get_double(const std::string& key);
  double get_double(const std::string& key, double fallback);
  long long get_int(const std::string& key);
  long long get_int(const std::string& key, long long fallback);
  bool get_bool(const std::string& key, bool fallback);
  std::vector<double> get_double_list(const std::string& key);
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback);
  std::vector<std::string> get_string_list(const std::string& key,
                                           const std::vector<std::string>& fallback);

  /// Throws ConfigError naming every key that was never consumed.
  void check_consumed() const;

private:
  std::string raw(const std::string& key);
  std::string origin_;
  std::map<std::string, std::string> values_;
  std::map<std::string, bool> used_;
};

}  // namespace wrcp
