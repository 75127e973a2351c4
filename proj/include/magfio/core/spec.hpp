#pragma once

#include "magfio/core/types.hpp"

#include <charconv>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace magfio {

// A registry reference: name plus numeric parameters, written on the command
// line as "name" or "name:key=value,key=value".
struct NamedSpec {
  std::string name;
  std::map<std::string, double> params;

  double get(const std::string& key, double fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  }

  bool has(const std::string& key) const { return params.count(key) != 0; }

  void check_keys(const std::vector<std::string>& allowed) const {
    for (const auto& [k, v] : params) {
      bool ok = false;
      for (const auto& a : allowed) ok = ok || a == k;
      if (!ok) throw ConfigError("'" + name + "': unknown parameter '" + k + "'");
    }
  }

  std::string to_string() const {
    std::ostringstream os;
    os << name;
    char sep = ':';
    for (const auto& [k, v] : params) {
      os << sep << k << '=' << v;
      sep = ',';
    }
    return os.str();
  }

  static NamedSpec parse(const std::string& text) {
    NamedSpec s;
    auto colon = text.find(':');
    s.name = text.substr(0, colon);
    if (s.name.empty()) throw ConfigError("empty registry name in '" + text + "'");
    if (colon == std::string::npos) return s;
    std::string rest = text.substr(colon + 1);
    std::size_t pos = 0;
    while (pos < rest.size()) {
      auto comma = rest.find(',', pos);
      std::string item = rest.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      auto eq = item.find('=');
      if (eq == std::string::npos || eq == 0)
        throw ConfigError("malformed parameter '" + item + "' in '" + text + "'");
      std::string key = item.substr(0, eq);
      std::string val = item.substr(eq + 1);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(val.data(), val.data() + val.size(), v);
      if (ec != std::errc() || ptr != val.data() + val.size())
        throw ConfigError("non-numeric value for '" + key + "' in '" + text + "'");
      s.params[key] = v;
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    return s;
  }
};

}  // namespace magfio
