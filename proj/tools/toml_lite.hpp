#pragma once

// Minimal TOML reader covering what bench configs use: comments, [table] and
// [[array-of-table]] headers, and key = value with strings, numbers, booleans
// or flat arrays. Parsed into a nlohmann json object.

#include <string>

#include "json.hpp"
#include "spicecheck/util.hpp"

namespace spicecheck::tomllite {

inline nlohmann::ordered_json parse_value(const std::string& raw) {
  using json = nlohmann::ordered_json;
  std::string v = detail::trim(raw);
  if (v.empty()) throw Error("toml-parse", "empty value");
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"') throw Error("toml-parse", "unterminated string: " + v);
    return json(v.substr(1, v.size() - 2));
  }
  if (v.front() == '[') {
    if (v.back() != ']') throw Error("toml-parse", "unterminated array: " + v);
    json arr = json::array();
    std::string inner = v.substr(1, v.size() - 2);
    std::string item;
    int depth = 0;
    bool in_str = false;
    for (char c : inner) {
      if (c == '"') in_str = !in_str;
      if (!in_str && c == '[') ++depth;
      if (!in_str && c == ']') --depth;
      if (c == ',' && depth == 0 && !in_str) {
        if (!detail::trim(item).empty()) arr.push_back(parse_value(item));
        item.clear();
      } else {
        item += c;
      }
    }
    if (!detail::trim(item).empty()) arr.push_back(parse_value(item));
    return arr;
  }
  if (v == "true") return json(true);
  if (v == "false") return json(false);
  try {
    if (v.find('.') != std::string::npos || v.find('e') != std::string::npos ||
        v.find('E') != std::string::npos)
      return json(std::stod(v));
    return json(std::stoll(v));
  } catch (const std::exception&) {
    throw Error("toml-parse", "unrecognized value: " + v);
  }
}

inline nlohmann::ordered_json parse(const std::string& text) {
  using json = nlohmann::ordered_json;
  json root = json::object();
  json* current = &root;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    std::string line = nl == std::string::npos ? text.substr(pos) : text.substr(pos, nl - pos);
    pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.rfind("[[", 0) == 0) {
      auto close = t.find("]]");
      if (close == std::string::npos) throw Error("toml-parse", "bad table header: " + t);
      std::string name = detail::trim(t.substr(2, close - 2));
      if (!root.contains(name)) root[name] = json::array();
      root[name].push_back(json::object());
      current = &root[name].back();
      continue;
    }
    if (t[0] == '[') {
      auto close = t.find(']');
      if (close == std::string::npos) throw Error("toml-parse", "bad table header: " + t);
      std::string name = detail::trim(t.substr(1, close - 1));
      root[name] = json::object();
      current = &root[name];
      continue;
    }
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw Error("toml-parse", "line " + std::to_string(line_no) + " is not key = value");
    std::string key = detail::trim(t.substr(0, eq));
    // strip trailing comments outside strings
    std::string raw = t.substr(eq + 1);
    std::string value;
    bool in_str = false;
    for (char c : raw) {
      if (c == '"') in_str = !in_str;
      if (c == '#' && !in_str) break;
      value += c;
    }
    (*current)[key] = parse_value(value);
  }
  return root;
}

}  // namespace spicecheck::tomllite
