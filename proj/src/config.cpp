#include "kpzlab/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace kpzlab {

namespace {

class TomlParser {
 public:
  explicit TomlParser(const std::string& text) : s_(text) {}

  nlohmann::json parse() {
    nlohmann::json root = nlohmann::json::object();
    nlohmann::json* table = &root;
    std::string table_name;
    while (true) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        ++pos_;
        if (peek() == '[') fail("", "arrays of tables are not supported");
        skip_ws();
        auto path = parse_key_path();
        skip_ws();
        expect(']');
        end_of_line();
        table = &root;
        table_name.clear();
        for (const auto& part : path) {
          table_name += (table_name.empty() ? "" : ".") + part;
          auto& next = (*table)[part];
          if (next.is_null()) next = nlohmann::json::object();
          if (!next.is_object()) fail(table_name, "redefined as a table");
          table = &next;
        }
        if (defined_tables_.count(table_name)) fail(table_name, "table defined twice");
        defined_tables_.insert({table_name, true});
        continue;
      }
      auto path = parse_key_path();
      skip_ws();
      expect('=');
      skip_ws();
      std::string full = table_name;
      for (const auto& p : path) full += (full.empty() ? "" : ".") + p;
      current_key_ = full;
      nlohmann::json value = parse_value();
      end_of_line();
      nlohmann::json* target = table;
      for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        auto& next = (*target)[path[i]];
        if (next.is_null()) next = nlohmann::json::object();
        if (!next.is_object()) fail(full, "dotted key collides with a value");
        target = &next;
      }
      if (target->contains(path.back())) fail(full, "duplicate key");
      (*target)[path.back()] = std::move(value);
    }
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ConfigError(key, msg + " (line " + std::to_string(line()) + ")");
  }
  int line() const {
    int l = 1;
    for (std::size_t i = 0; i < pos_ && i < s_.size(); ++i)
      if (s_[i] == '\n') ++l;
    return l;
  }
  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return eof() ? '\0' : s_[pos_]; }
  void expect(char c) {
    if (peek() != c) fail(current_key_, std::string("expected '") + c + "'");
    ++pos_;
  }
  void skip_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }
  void skip_comment() {
    if (peek() == '#')
      while (!eof() && peek() != '\n') ++pos_;
  }
  void skip_blank_lines() {
    while (!eof()) {
      skip_ws();
      skip_comment();
      if (peek() == '\n' || peek() == '\r') {
        ++pos_;
        continue;
      }
      break;
    }
  }
  // Whitespace, comments and newlines inside arrays.
  void skip_array_space() {
    while (!eof()) {
      skip_ws();
      skip_comment();
      if (peek() == '\n' || peek() == '\r') {
        ++pos_;
        continue;
      }
      break;
    }
  }
  void end_of_line() {
    skip_ws();
    skip_comment();
    if (eof()) return;
    if (peek() == '\r') ++pos_;
    if (peek() != '\n') fail(current_key_, "unexpected trailing characters");
    ++pos_;
  }

  std::vector<std::string> parse_key_path() {
    std::vector<std::string> parts;
    while (true) {
      skip_ws();
      if (peek() == '"' || peek() == '\'') {
        parts.push_back(parse_string());
      } else {
        std::string k;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) k += s_[pos_++];
        if (k.empty()) fail(current_key_, "expected a key");
        parts.push_back(k);
      }
      skip_ws();
      if (peek() != '.') break;
      ++pos_;
    }
    return parts;
  }

  std::string parse_string() {
    const char quote = peek();
    ++pos_;
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail(current_key_, "unterminated string");
      const char c = s_[pos_++];
      if (c == quote) break;
      if (c == '\\' && quote == '"') {
        if (eof()) fail(current_key_, "unterminated escape");
        const char e = s_[pos_++];
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case 'r': out += '\r'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: fail(current_key_, std::string("unsupported escape \\") + e);
        }
        continue;
      }
      out += c;
    }
    return out;
  }

  nlohmann::json parse_value() {
    const char c = peek();
    if (c == '"' || c == '\'') return parse_string();
    if (c == '[') {
      ++pos_;
      nlohmann::json arr = nlohmann::json::array();
      skip_array_space();
      while (peek() != ']') {
        arr.push_back(parse_value());
        skip_array_space();
        if (peek() == ',') {
          ++pos_;
          skip_array_space();
          continue;
        }
        if (peek() != ']') fail(current_key_, "expected ',' or ']' in array");
      }
      ++pos_;
      return arr;
    }
    if (c == '{') fail(current_key_, "inline tables are not supported");
    std::string tok;
    while (!eof() && !std::isspace(static_cast<unsigned char>(peek())) && peek() != ',' && peek() != ']' && peek() != '#')
      tok += s_[pos_++];
    if (tok == "true") return true;
    if (tok == "false") return false;
    if (tok.empty()) fail(current_key_, "missing value");
    std::string clean;
    for (std::size_t i = 0; i < tok.size(); ++i) {
      if (tok[i] == '_') {
        if (i == 0 || i + 1 == tok.size() || !std::isdigit(static_cast<unsigned char>(tok[i - 1])) ||
            !std::isdigit(static_cast<unsigned char>(tok[i + 1])))
          fail(current_key_, "misplaced '_' in number '" + tok + "'");
        continue;
      }
      clean += tok[i];
    }
    if (clean == "inf" || clean == "+inf" || clean == "-inf" || clean == "nan" || clean == "+nan" || clean == "-nan")
      fail(current_key_, "non-finite numbers are not accepted");
    const bool is_float = clean.find_first_of(".eE") != std::string::npos;
    const char* b = clean.data();
    const char* e = clean.data() + clean.size();
    if (*b == '+') ++b;
    if (!is_float) {
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(b, e, v);
      if (ec == std::errc() && p == e) return v;
    } else {
      double v = 0.0;
      auto [p, ec] = std::from_chars(b, e, v);
      if (ec == std::errc() && p == e) return v;
    }
    fail(current_key_, "cannot parse value '" + tok + "'");
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  std::string current_key_;
  std::map<std::string, bool> defined_tables_;
};

}  // namespace

nlohmann::json parse_toml(const std::string& text) { return TomlParser(text).parse(); }

nlohmann::json load_toml_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_toml(ss.str());
}

}  // namespace kpzlab
