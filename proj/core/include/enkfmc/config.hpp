#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace enkfmc {

/// Flat `key = value` configuration. Lines starting with `#` (and anything
/// after a `#` on a line) are comments. Later assignments override earlier
/// ones.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text, std::string_view source = "<string>");
  static KeyValueConfig load(const std::filesystem::path& path);

  /// Applies a single "key=value" override.
  void set(std::string_view assignment);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& values() const noexcept { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

std::string trim(std::string_view s);
std::vector<std::string> split_list(std::string_view s, char sep = ',');

double parse_double(std::string_view key, std::string_view value);
long long parse_int(std::string_view key, std::string_view value);
unsigned long long parse_u64(std::string_view key, std::string_view value);
bool parse_bool(std::string_view key, std::string_view value);

}  // namespace enkfmc
