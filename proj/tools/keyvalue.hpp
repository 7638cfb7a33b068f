#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace scoopflow_cli {

using Entries = std::vector<std::pair<std::string, std::string>>;

/// A TOML subset: `key = value` lines, `#` comments, quoted strings, inline
/// arrays of numbers (flattened to "a,b,c") and `[[table]]` array headers.
struct KeyValueDoc {
  Entries top;
  std::vector<std::pair<std::string, Entries>> tables;  // header name, entries
};

struct KeyValueError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

KeyValueDoc parse_key_values(const std::string& text, const std::string& origin);
KeyValueDoc load_key_values(const std::string& path);

}  // namespace scoopflow_cli
