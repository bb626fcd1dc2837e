#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fibernoise {

/// Flat, sectioned key-value text.
///
///     # comment
///     top_level_key = value
///     [section]
///     key = value            # trailing comments are allowed
///
/// Keys inside a section are addressed as "section.key". Duplicate keys are an
/// error. Insertion order is preserved when writing.
class KeyValueFile {
 public:
  static KeyValueFile parse(const std::string& text, const std::string& origin = "<string>");
  static KeyValueFile load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, long long value);

  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> find(const std::string& key) const;

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;

  /// Keys in insertion order.
  const std::vector<std::string>& keys() const { return order_; }
  const std::string& origin() const { return origin_; }

  /// Serializes with one `[section]` header per distinct prefix, in first-use order.
  std::string to_string() const;
  void save(const std::filesystem::path& path) const;

 private:
  std::string origin_;
  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
};

/// Shortest round-trip decimal representation of a double.
std::string format_double(double value);

}  // namespace fibernoise
