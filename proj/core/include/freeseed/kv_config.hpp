#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace freeseed {

/// Flat `key=value` text store. Lines starting with '#' are comments.
/// Keys keep insertion order on output so files diff cleanly.
class KeyValues {
 public:
  static KeyValues parse(const std::string& text);
  static KeyValues load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
  std::string to_string() const;

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, long long value);
  void set(const std::string& key, int value) { set(key, static_cast<long long>(value)); }
  void set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }

  /// Throws std::invalid_argument when the key is missing or unparsable.
  const std::string& get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<long long> get_int_list(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Throws std::invalid_argument naming the first key not in `allowed`.
  void require_known(const std::set<std::string>& allowed) const;

  const std::vector<std::string>& keys() const { return order_; }

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
};

/// Shortest round-tripping decimal form of a double.
std::string format_double(double value);

}  // namespace freeseed
