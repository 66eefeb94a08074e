#pragma once

// Flat key = value configuration. A line "[section]" prefixes the keys that
// follow with "section."; dotted keys may also be written out in full.
// '#' starts a comment. Every key must be consumed by the experiment that
// reads the file, so misspelled keys are reported instead of ignored.

#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "blochsim/error.hpp"

namespace blochsim::cli {

namespace detail {
inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-')) return false;
  return k.front() != '.' && k.back() != '.';
}
}  // namespace detail

class Config {
 public:
  static Config parse(std::string_view text, const std::string& origin = "<config>") {
    Config c;
    std::string section;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string t = detail::trim(line);
      if (t.empty()) continue;
      const std::string where = origin + ":" + std::to_string(lineno);
      if (t.front() == '[') {
        if (t.back() != ']') throw ConfigError("", where + ": unterminated section header");
        section = detail::trim(std::string_view(t).substr(1, t.size() - 2));
        if (!detail::valid_key(section))
          throw ConfigError("", where + ": invalid section name '" + section + "'");
        continue;
      }
      const auto eq = t.find('=');
      if (eq == std::string::npos) throw ConfigError("", where + ": expected 'key = value'");
      std::string key = detail::trim(std::string_view(t).substr(0, eq));
      std::string value = detail::trim(std::string_view(t).substr(eq + 1));
      if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
        value = value.substr(1, value.size() - 2);
      if (!detail::valid_key(key)) throw ConfigError(key, where + ": invalid key");
      if (!section.empty()) key = section + "." + key;
      if (c.values_.count(key)) throw ConfigError(key, where + ": duplicate key");
      c.values_[key] = value;
    }
    return c;
  }

  static Config load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("", "cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse(ss.str(), path);
  }

  /// Adds or replaces a dotted key.
  void set(const std::string& key, const std::string& value) {
    if (!detail::valid_key(key)) throw ConfigError(key, "invalid key");
    values_[key] = value;
  }

  bool empty() const { return values_.empty(); }
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::optional<std::string> find(const std::string& key) const {
    used_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  std::string string(const std::string& key) const {
    auto v = find(key);
    if (!v) throw ConfigError(key, "required key is missing");
    return *v;
  }
  std::string string(const std::string& key, const std::string& fallback) const {
    return find(key).value_or(fallback);
  }

  double number(const std::string& key) const { return to_number(key, string(key)); }
  double number(const std::string& key, double fallback) const {
    auto v = find(key);
    return v ? to_number(key, *v) : fallback;
  }
  std::optional<double> optional_number(const std::string& key) const {
    auto v = find(key);
    if (!v) return std::nullopt;
    return to_number(key, *v);
  }

  double positive(const std::string& key, double fallback) const {
    const double v = number(key, fallback);
    if (!(v > 0.0)) throw ConfigError(key, "must be positive");
    return v;
  }

  long integer(const std::string& key, long fallback) const {
    const double v = number(key, static_cast<double>(fallback));
    if (v != std::floor(v) || std::abs(v) > 1e15) throw ConfigError(key, "must be an integer");
    return static_cast<long>(v);
  }
  long positive_integer(const std::string& key, long fallback) const {
    const long v = integer(key, fallback);
    if (v <= 0) throw ConfigError(key, "must be a positive integer");
    return v;
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const {
    auto v = find(key);
    if (!v) return fallback;
    std::vector<double> out;
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = detail::trim(item);
      if (item.empty()) throw ConfigError(key, "empty list entry");
      out.push_back(to_number(key, item));
    }
    if (out.empty()) throw ConfigError(key, "empty list");
    return out;
  }

  std::string choice(const std::string& key, const std::string& fallback,
                     const std::vector<std::string>& allowed) const {
    const std::string v = string(key, fallback);
    for (const auto& a : allowed)
      if (a == v) return v;
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
    throw ConfigError(key, "'" + v + "' is not one of " + list);
  }

  /// Throws for the first key that no reader asked for.
  void reject_unused() const {
    for (const auto& [k, v] : values_)
      if (!used_.count(k)) throw ConfigError(k, "unknown key for this experiment");
  }

 private:
  static double to_number(const std::string& key, const std::string& text) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE || !std::isfinite(v))
      throw ConfigError(key, "'" + text + "' is not a finite number");
    return v;
  }

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

}  // namespace blochsim::cli
