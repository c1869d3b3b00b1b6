#pragma once

// Flat `key = value` configuration files. Keys use dotted section prefixes
// (`data.samples`, `loss.schedule`); `#` starts a comment.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace autofocal {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Config {
 public:
  static Config parse(const std::string& text, const std::string& origin = "<string>");
  static Config load(const std::string& path);

  bool contains(const std::string& key) const { return entries_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;
  void set(const std::string& key, const std::string& value) { entries_[key] = value; }

  std::string text(const std::string& key, const std::string& fallback) const;
  double number(const std::string& key, double fallback) const;
  std::int64_t integer(const std::string& key, std::int64_t fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  std::vector<int> int_list(const std::string& key, const std::vector<int>& fallback) const;
  std::vector<std::string> text_list(const std::string& key) const;

  /// Throws ConfigError naming any key that no accessor has read.
  void reject_unused() const;

  const std::map<std::string, std::string>& entries() const { return entries_; }
  const std::string& origin() const { return origin_; }

 private:
  std::map<std::string, std::string> entries_;
  mutable std::set<std::string> used_;
  std::string origin_;
};

std::string trim_copy(const std::string& s);
std::vector<std::string> split_list(const std::string& s, char separator = ',');

}  // namespace autofocal
