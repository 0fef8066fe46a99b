#ifndef KPZLAB_CONFIG_HPP
#define KPZLAB_CONFIG_HPP

#include <stdexcept>
#include <string>

#include "json.hpp"

namespace kpzlab {

/// Configuration problem; `key` names the offending entry when known.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : std::runtime_error(key.empty() ? what : key + ": " + what), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Parse the TOML subset used by plan files into a JSON object:
///   [table] and [table.sub] headers, bare or quoted keys, dotted keys,
///   basic and literal strings, integers (with _ separators), floats, booleans,
///   arrays (may span lines, trailing comma allowed) and # comments.
/// Duplicate keys, inline tables and dates are rejected.
nlohmann::json parse_toml(const std::string& text);
nlohmann::json load_toml_file(const std::string& path);

}  // namespace kpzlab

#endif  // KPZLAB_CONFIG_HPP
