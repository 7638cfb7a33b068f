#include "keyvalue.hpp"

#include <fstream>
#include <sstream>

namespace scoopflow_cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

std::string unquote(const std::string& raw, const std::string& where) {
  std::string v = trim(raw);
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
  if (!v.empty() && v.front() == '[') {
    if (v.back() != ']') throw KeyValueError(where + ": unterminated array");
    std::string out;
    std::stringstream items(v.substr(1, v.size() - 2));
    std::string item;
    while (std::getline(items, item, ',')) {
      if (!out.empty()) out += ',';
      out += trim(item);
    }
    return out;
  }
  if (v.empty()) throw KeyValueError(where + ": missing value");
  return v;
}

}  // namespace

KeyValueDoc parse_key_values(const std::string& text, const std::string& origin) {
  KeyValueDoc doc;
  std::istringstream in(text);
  std::string line;
  for (int line_no = 1; std::getline(in, line); ++line_no) {
    const std::string where = origin + ":" + std::to_string(line_no);
    const std::string body = trim(strip_comment(line));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.size() < 5 || body.compare(0, 2, "[[") != 0 || body.compare(body.size() - 2, 2, "]]") != 0) {
        throw KeyValueError(where + ": only [[table]] headers are supported");
      }
      doc.tables.emplace_back(trim(body.substr(2, body.size() - 4)), Entries{});
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw KeyValueError(where + ": expected key = value");
    const std::string key = trim(body.substr(0, eq));
    if (key.empty()) throw KeyValueError(where + ": empty key");
    Entries& target = doc.tables.empty() ? doc.top : doc.tables.back().second;
    target.emplace_back(key, unquote(body.substr(eq + 1), where));
  }
  return doc;
}

KeyValueDoc load_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw KeyValueError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str(), path);
}

}  // namespace scoopflow_cli
