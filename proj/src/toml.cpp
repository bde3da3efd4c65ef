#include "starwave/toml.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "starwave/common.hpp"

namespace starwave {

namespace {

using json = nlohmann::json;

class Parser {
 public:
  Parser(const std::string& text, std::string origin) : s_(text), origin_(std::move(origin)) {}

  json document() {
    json root = json::object();
    json* current = &root;
    for (;;) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        current = table_header(root);
      } else {
        key_value(*current);
      }
      end_of_line();
    }
    return root;
  }

  json single_value() {
    skip_ws();
    json v = value();
    skip_ws();
    if (!eof()) fail("trailing characters after value");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw InputError(origin_ + ":" + std::to_string(line_) + ": " + what);
  }

  bool eof() const { return i_ >= s_.size(); }
  char peek(std::size_t k = 0) const { return i_ + k < s_.size() ? s_[i_ + k] : '\0'; }
  char get() {
    const char c = s_[i_++];
    if (c == '\n') ++line_;
    return c;
  }

  void skip_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++i_;
  }
  void skip_comment() {
    if (peek() == '#')
      while (!eof() && peek() != '\n') ++i_;
  }
  void skip_blank_lines() {
    for (;;) {
      skip_ws();
      skip_comment();
      if (peek() == '\r') ++i_;
      if (peek() == '\n') {
        get();
        continue;
      }
      break;
    }
  }
  /// Whitespace, comments and newlines inside arrays.
  void skip_all() {
    for (;;) {
      skip_blank_lines();
      if (peek() == '\n') continue;
      break;
    }
  }
  void end_of_line() {
    skip_ws();
    skip_comment();
    if (peek() == '\r') ++i_;
    if (eof()) return;
    if (peek() != '\n') fail(std::string("unexpected '") + peek() + "'");
    get();
  }

  std::string key_part() {
    skip_ws();
    if (peek() == '"' || peek() == '\'') return string_value();
    std::string k;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) k += s_[i_++];
    if (k.empty()) fail("expected a key");
    return k;
  }

  std::vector<std::string> key_path() {
    std::vector<std::string> keys{key_part()};
    skip_ws();
    while (peek() == '.') {
      ++i_;
      keys.push_back(key_part());
      skip_ws();
    }
    return keys;
  }

  /// Descends through intermediate keys, creating tables; arrays of tables
  /// resolve to their last element.
  json& descend(json& node, const std::vector<std::string>& keys, std::size_t count) {
    json* cur = &node;
    for (std::size_t k = 0; k < count; ++k) {
      json& next = (*cur)[keys[k]];
      if (next.is_null()) next = json::object();
      if (next.is_array() && !next.empty() && next.back().is_object()) {
        cur = &next.back();
      } else if (next.is_object()) {
        cur = &next;
      } else {
        fail("key '" + keys[k] + "' is not a table");
      }
    }
    return *cur;
  }

  json* table_header(json& root) {
    ++i_;
    const bool array = peek() == '[';
    if (array) ++i_;
    const auto keys = key_path();
    if (peek() != ']' || (array && peek(1) != ']')) fail("unterminated table header");
    i_ += array ? 2 : 1;
    json& parent = descend(root, keys, keys.size() - 1);
    json& slot = parent[keys.back()];
    if (array) {
      if (slot.is_null()) slot = json::array();
      if (!slot.is_array()) fail("'" + keys.back() + "' is not an array of tables");
      slot.push_back(json::object());
      return &slot.back();
    }
    if (slot.is_null()) slot = json::object();
    if (!slot.is_object()) fail("'" + keys.back() + "' is not a table");
    return &slot;
  }

  void key_value(json& table) {
    const auto keys = key_path();
    skip_ws();
    if (peek() != '=') fail("expected '=' after key '" + keys.back() + "'");
    ++i_;
    skip_ws();
    json v = value();
    json& parent = descend(table, keys, keys.size() - 1);
    if (parent.contains(keys.back())) fail("duplicate key '" + keys.back() + "'");
    parent[keys.back()] = std::move(v);
  }

  std::string string_value() {
    const char q = get();
    std::string out;
    for (;;) {
      if (eof() || peek() == '\n') fail("unterminated string");
      const char c = get();
      if (c == q) break;
      if (c == '\\' && q == '"') {
        const char e = get();
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case 'r': out += '\r'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      } else {
        out += c;
      }
    }
    return out;
  }

  json number_or_bool() {
    std::string tok;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '.' || peek() == '+' ||
                      peek() == '-' || peek() == '_'))
      tok += s_[i_++];
    if (tok == "true") return true;
    if (tok == "false") return false;
    std::string t;
    for (char c : tok)
      if (c != '_') t += c;
    const std::string body = (!t.empty() && (t[0] == '+' || t[0] == '-')) ? t.substr(1) : t;
    const double sign = !t.empty() && t[0] == '-' ? -1.0 : 1.0;
    if (body == "inf") return sign * std::numeric_limits<double>::infinity();
    if (body == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (t.empty()) fail("expected a value");
    char* end = nullptr;
    const bool is_float = t.find_first_of(".eE") != std::string::npos;
    if (is_float) {
      const double d = std::strtod(t.c_str(), &end);
      if (*end != '\0') fail("invalid number '" + tok + "'");
      return d;
    }
    const long long v = std::strtoll(t.c_str(), &end, 10);
    if (*end != '\0') fail("invalid value '" + tok + "'");
    return v;
  }

  json value() {
    const char c = peek();
    if (c == '"' || c == '\'') return string_value();
    if (c == '[') {
      ++i_;
      json arr = json::array();
      for (;;) {
        skip_all();
        if (peek() == ']') {
          ++i_;
          break;
        }
        arr.push_back(value());
        skip_all();
        if (peek() == ',') {
          ++i_;
        } else if (peek() != ']') {
          fail("expected ',' or ']' in array");
        }
      }
      return arr;
    }
    if (c == '{') {
      ++i_;
      json tab = json::object();
      skip_ws();
      if (peek() == '}') {
        ++i_;
        return tab;
      }
      for (;;) {
        key_value(tab);
        skip_ws();
        if (peek() == ',') {
          ++i_;
          continue;
        }
        if (peek() == '}') {
          ++i_;
          break;
        }
        fail("expected ',' or '}' in inline table");
      }
      return tab;
    }
    return number_or_bool();
  }

  const std::string& s_;
  std::string origin_;
  std::size_t i_ = 0;
  int line_ = 1;
};

}  // namespace

nlohmann::json parse_toml(const std::string& text, const std::string& origin) {
  return Parser(text, origin).document();
}

nlohmann::json load_toml(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_toml(ss.str(), path);
}

nlohmann::json parse_toml_value(const std::string& text) {
  try {
    return Parser(text, "<override>").single_value();
  } catch (const InputError&) {
    return text;
  }
}

}  // namespace starwave
