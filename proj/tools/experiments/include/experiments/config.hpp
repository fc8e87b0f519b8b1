#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "membrane/site.hpp"

namespace experiments {

// Invalid or missing configuration; maps to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kEnvPrefix = "MEMBRANE_";

// Flat key=value configuration with # comments. Keys are lower case; the
// environment variable MEMBRANE_<KEY> (upper case, '-' and '.' as '_')
// overrides any key.
class Config {
 public:
  static Config parse(std::istream& is, const std::string& origin = "<stream>");
  static Config load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void apply_environment();

  std::string get_string(const std::string& key, const std::optional<std::string>& def = std::nullopt) const;
  std::int64_t get_int(const std::string& key, std::optional<std::int64_t> def = std::nullopt) const;
  double get_double(const std::string& key, std::optional<double> def = std::nullopt) const;
  bool get_bool(const std::string& key, std::optional<bool> def = std::nullopt) const;
  // Comma-separated lists.
  std::vector<double> get_doubles(const std::string& key, const std::optional<std::vector<double>>& def = std::nullopt) const;
  std::vector<std::int64_t> get_ints(const std::string& key,
                                     const std::optional<std::vector<std::int64_t>>& def = std::nullopt) const;
  // Space-separated coordinates.
  membrane::Site get_site(const std::string& key, int dim, const std::optional<membrane::Site>& def = std::nullopt) const;

  // Sorted key=value lines; parse(serialize()) reproduces the config.
  std::string serialize() const;
  // FNV-1a 64 of serialize(), as 16 hex digits.
  std::string hash() const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

std::string env_name(const std::string& key);

}  // namespace experiments
