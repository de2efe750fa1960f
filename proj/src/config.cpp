#include "wrcp/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "wrcp/csv.hpp"
#include "wrcp/errors.hpp"

namespace wrcp {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

ConfigMap ConfigMap::parse(const std::string& text, const std::string& origin) {
  ConfigMap cfg;
  cfg.origin_ = origin;
  std::stringstream ss(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    }
    if (cfg.values_.count(key)) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" +
                        key + "'");
    }
    cfg.values_[key] = value;
    cfg.used_[key] = false;
  }
  const long long version = cfg.get_int("schema_version", -1);
  if (version != 1) {
    throw ConfigError(origin + ": missing or unsupported schema_version (expected 1)");
  }
  return cfg;
}

ConfigMap ConfigMap::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

bool ConfigMap::has(const std::string& key) const { return values_.count(key) > 0; }

std::string ConfigMap::raw(const std::string& key) {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    throw ConfigError(origin_ + ": missing config key '" + key + "'");
  }
  used_[key] = true;
  return it->second;
}

std::string ConfigMap::get_string(const std::string& key) { return raw(key); }

std::string ConfigMap::get_string(const std::string& key, const std::string& fallback) {
  return has(key) ? raw(key) : fallback;
}

double ConfigMap::get_double(const std::string& key) {
  const std::string v = raw(key);
  char* end = nullptr;
  errno = 0;
  const double out = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || errno == ERANGE) {
    throw ConfigError(origin_ + ": key '" + key + "' is not a number: '" + v + "'");
  }
  return out;
}

double ConfigMap::get_double(const std::string& key, double fallback) {
  return has(key) ? get_double(key) : fallback;
}

long long ConfigMap::get_int(const std::string& key) {
  const std::string v = raw(key);
  char* end = nullptr;
  errno = 0;
  const long long out = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || *end != '\0' || errno == ERANGE) {
    throw ConfigError(origin_ + ": key '" + key + "' is not an integer: '" + v + "'");
  }
  return out;
}

long long ConfigMap::get_int(const std::string& key, long long fallback) {
  return has(key) ? get_int(key) : fallback;
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) {
  if (!has(key)) return fallback;
  const std::string v = raw(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(origin_ + ": key '" + key + "' is not a boolean: '" + v + "'");
}

std::vector<double> ConfigMap::get_double_list(const std::string& key) {
  const std::string v = raw(key);
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    char* end = nullptr;
    errno = 0;
    out.push_back(std::strtod(item.c_str(), &end));
    if (*end != '\0' || errno == ERANGE) {
      throw ConfigError(origin_ + ": key '" + key + "' has a bad list entry: '" +
                        item + "'");
    }
  }
  if (out.empty()) {
    throw ConfigError(origin_ + ": key '" + key + "' must be a nonempty list");
  }
  return out;
}

std::vector<double> ConfigMap::get_double_list(const std::string& key,
                                               const std::vector<double>& fallback) {
  return has(key) ? get_double_list(key) : fallback;
}

std::vector<std::string> ConfigMap::get_string_list(
    const std::string& key, const std::vector<std::string>& fallback) {
  if (!has(key)) return fallback;
  const std::string v = raw(key);
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  if (out.empty()) {
    throw ConfigError(origin_ + ": key '" + key + "' must be a nonempty list");
  }
  return out;
}

void ConfigMap::check_consumed() const {
  std::string unknown;
  for (const auto& [key, used] : used_) {
    if (!used) {
      if (!unknown.empty()) unknown += ", ";
      unknown += "'" + key + "'";
    }
  }
  if (!unknown.empty()) {
    throw ConfigError(origin_ + ": unknown config key(s): " + unknown);
  }
}

}  // namespace wrcp
