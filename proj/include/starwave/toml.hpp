#pragma once

#include <string>

#include <json.hpp>

namespace starwave {

/// Reads the TOML subset used by run configurations into JSON: tables,
/// arrays of tables, dotted keys, basic and literal strings, integers,
/// floats (including inf/nan), booleans, arrays and inline tables.
/// Errors are InputError with origin:line.
nlohmann::json parse_toml(const std::string& text, const std::string& origin = "<string>");
nlohmann::json load_toml(const std::string& path);

/// A single TOML value, e.g. the right-hand side of a command-line override.
/// Text that is not a valid value is taken as a bare string.
nlohmann::json parse_toml_value(const std::string& text);

}  // namespace starwave
