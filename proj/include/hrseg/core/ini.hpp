#pragma once

#include <map>
#include <sstream>
#include <string>

#include "hrseg/core/errors.hpp"

namespace hrseg {

using IniDoc = std::map<std::string, std::map<std::string, std::string>>;

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

// Flat "key = value" text with [section] headers and '#' comments.
inline IniDoc parse_ini(const std::string& text) {
  IniDoc doc;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ConfigError("malformed section header at line " + std::to_string(lineno));
      }
      section = detail::trim(line.substr(1, line.size() - 2));
      doc[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("expected 'key = value' at line " + std::to_string(lineno) +
                        ": '" + line + "'");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key at line " + std::to_string(lineno));
    auto& sec = doc[section];
    if (sec.count(key)) {
      throw ConfigError("duplicate key '" + key + "' in [" + section + "]");
    }
    sec[key] = value;
  }
  return doc;
}

inline std::string serialize_ini(const IniDoc& doc) {
  std::ostringstream out;
  bool first = true;
  for (const auto& [section, kv] : doc) {
    if (!first) out << "\n";
    first = false;
    out << "[" << section << "]\n";
    for (const auto& [k, v] : kv) out << k << " = " << v << "\n";
  }
  return out.str();
}

inline double ini_double(const std::string& section, const std::string& key,
                         const std::string& value) {
  try {
    size_t pos = 0;
    const double d = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "' in [" + section + "] expects a number, got '" +
                      value + "'");
  }
}

inline int64_t ini_int(const std::string& section, const std::string& key,
                       const std::string& value) {
  try {
    size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "' in [" + section + "] expects an integer, got '" +
                      value + "'");
  }
}

inline bool ini_bool(const std::string& section, const std::string& key,
                     const std::string& value) {
  if (value == "true" || value == "1" || value == "on") return true;
  if (value == "false" || value == "0" || value == "off") return false;
  throw ConfigError("key '" + key + "' in [" + section + "] expects true/false, got '" +
                    value + "'");
}

}  // namespace hrseg
