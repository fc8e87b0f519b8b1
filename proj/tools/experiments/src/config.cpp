#include "experiments/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

extern char** environ;

namespace experiments {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const char* b = text.data();
  const char* e = b + text.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e) throw ConfigError(fmt::format("{}: cannot parse '{}' as a number", key, text));
  return v;
}

}  // namespace

std::string env_name(const std::string& key) {
  std::string out = kEnvPrefix;
  for (char c : key) out += (c == '-' || c == '.') ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

Config Config::parse(std::istream& is, const std::string& origin) {
  Config c;
  std::string line;
  int n = 0;
  while (std::getline(is, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("{}:{}: expected key=value", origin, n));
    const std::string key = lower(trim(line.substr(0, eq)));
    if (key.empty()) throw ConfigError(fmt::format("{}:{}: empty key", origin, n));
    c.values_[key] = trim(line.substr(eq + 1));
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path.string());
  return parse(is, path.string());
}

void Config::set(const std::string& key, const std::string& value) { values_[lower(trim(key))] = trim(value); }

void Config::apply_environment() {
  const std::string prefix = kEnvPrefix;
  for (char** e = environ; e && *e; ++e) {
    const std::string entry = *e;
    if (entry.rfind(prefix, 0) != 0) continue;
    const auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    std::string key = lower(entry.substr(prefix.size(), eq - prefix.size()));
    if (key.empty()) continue;
    // an existing key spelled with '-' or '.' keeps its spelling
    for (const auto& [k, v] : values_)
      if (env_name(k) == entry.substr(0, eq)) key = k;
    values_[key] = trim(entry.substr(eq + 1));
  }
}

std::string Config::get_string(const std::string& key, const std::optional<std::string>& def) const {
  auto it = values_.find(key);
  if (it != values_.end()) return it->second;
  if (def) return *def;
  throw ConfigError("missing config key '" + key + "'");
}

std::int64_t Config::get_int(const std::string& key, std::optional<std::int64_t> def) const {
  auto it = values_.find(key);
  if (it == values_.end()) {
    if (def) return *def;
    throw ConfigError("missing config key '" + key + "'");
  }
  return parse_number<std::int64_t>(key, it->second);
}

double Config::get_double(const std::string& key, std::optional<double> def) const {
  auto it = values_.find(key);
  if (it == values_.end()) {
    if (def) return *def;
    throw ConfigError("missing config key '" + key + "'");
  }
  const std::string t = lower(it->second);
  if (t == "inf" || t == "infinity") return std::numeric_limits<double>::infinity();
  return parse_number<double>(key, it->second);
}

bool Config::get_bool(const std::string& key, std::optional<bool> def) const {
  auto it = values_.find(key);
  if (it == values_.end()) {
    if (def) return *def;
    throw ConfigError("missing config key '" + key + "'");
  }
  const std::string t = lower(it->second);
  if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
  if (t == "0" || t == "false" || t == "no" || t == "off") return false;
  throw ConfigError(fmt::format("{}: cannot parse '{}' as a boolean", key, it->second));
}

std::vector<double> Config::get_doubles(const std::string& key, const std::optional<std::vector<double>>& def) const {
  auto it = values_.find(key);
  if (it == values_.end()) {
    if (def) return *def;
    throw ConfigError("missing config key '" + key + "'");
  }
  std::vector<double> out;
  for (const auto& s : split(it->second, ',')) out.push_back(parse_number<double>(key, s));
  return out;
}

std::vector<std::int64_t> Config::get_ints(const std::string& key,
                                           const std::optional<std::vector<std::int64_t>>& def) const {
  auto it = values_.find(key);
  if (it == values_.end()) {
    if (def) return *def;
    throw ConfigError("missing config key '" + key + "'");
  }
  std::vector<std::int64_t> out;
  for (const auto& s : split(it->second, ',')) out.push_back(parse_number<std::int64_t>(key, s));
  return out;
}

membrane::Site Config::get_site(const std::string& key, int dim, const std::optional<membrane::Site>& def) const {
  auto it = values_.find(key);
  if (it == values_.end()) {
    if (def) return *def;
    throw ConfigError("missing config key '" + key + "'");
  }
  const auto parts = split(it->second, ' ');
  if (static_cast<int>(parts.size()) != dim)
    throw ConfigError(fmt::format("{}: expected {} coordinates, got '{}'", key, dim, it->second));
  membrane::Site s(dim);
  for (int i = 0; i < dim; ++i) s[i] = parse_number<std::int64_t>(key, parts[static_cast<std::size_t>(i)]);
  return s;
}

std::string Config::serialize() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

std::string Config::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : serialize()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace experiments
