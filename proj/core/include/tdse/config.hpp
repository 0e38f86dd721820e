#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace tdse {

/// Flat `key = value` settings. Lines starting with '#' and blank lines are
/// ignored; a repeated key keeps the last value.
class Config {
 public:
  static Config parse(std::istream& in, const std::string& source = "<stream>");
  static Config load(const std::filesystem::path& path);

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::optional<std::string> find(const std::string& key) const;

  std::string text(const std::string& key, const std::string& fallback) const;
  double real(const std::string& key, double fallback) const;
  std::size_t size(const std::string& key, std::size_t fallback) const;
  std::uint64_t u64(const std::string& key, std::uint64_t fallback) const;
  /// Comma-separated, items trimmed, empty items dropped.
  std::vector<std::string> list(const std::string& key) const;

  /// For each key in `keys`, a variable named prefix + KEY (upper case, '.'
  /// replaced by '_') overrides the stored value when set.
  void apply_env(const std::vector<std::string>& keys, const std::string& prefix = "TDSE_");
  static std::string env_name(const std::string& key, const std::string& prefix = "TDSE_");

  /// Throws InvalidConfig naming the first key not in `known`.
  void check_known(const std::vector<std::string>& known) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  void write(std::ostream& out) const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace tdse
