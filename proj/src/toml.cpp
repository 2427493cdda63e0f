// Copyright 2026 The lipcert Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lipcert/toml.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace lipcert {

namespace {

[[noreturn]] void fail(int line, const std::string& what) {
  throw DataError("config line " + std::to_string(line) + ": " + what);
}

std::string strip(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// Removes a trailing comment, respecting quoted strings.
std::string strip_comment(const std::string& s) {
  bool in_string = false;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) in_string = !in_string;
    if (s[i] == '#' && !in_string) return s.substr(0, i);
  }
  return s;
}

std::string parse_quoted(const std::string& raw, int line) {
  if (raw.size() < 2 || raw.back() != '"') fail(line, "unterminated string " + raw);
  std::string out;
  for (size_t i = 1; i + 1 < raw.size(); ++i) {
    char c = raw[i];
    if (c == '\\') {
      if (i + 2 >= raw.size()) fail(line, "dangling escape in " + raw);
      char e = raw[++i];
      switch (e) {
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        default: fail(line, std::string("unsupported escape \\") + e);
      }
    } else if (c == '"') {
      fail(line, "unexpected quote inside " + raw);
    } else {
      out.push_back(c);
    }
  }
  return out;
}

bool looks_numeric(const std::string& s) {
  if (s.empty()) return false;
  char c = s[0];
  return std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' ||
         c == '.';
}

double parse_number(const std::string& s, int line) {
  std::string cleaned;
  cleaned.reserve(s.size());
  for (char c : s) {
    if (c != '_') cleaned.push_back(c);
  }
  char* end = nullptr;
  const double v = std::strtod(cleaned.c_str(), &end);
  if (end == cleaned.c_str() || *end != '\0') fail(line, "bad number " + s);
  return v;
}

std::vector<std::string> split_array_items(const std::string& body, int line) {
  std::vector<std::string> items;
  std::string cur;
  bool in_string = false;
  for (size_t i = 0; i < body.size(); ++i) {
    char c = body[i];
    if (c == '"' && (i == 0 || body[i - 1] != '\\')) in_string = !in_string;
    if (c == ',' && !in_string) {
      items.push_back(strip(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (in_string) fail(line, "unterminated string in array");
  const std::string last = strip(cur);
  if (!last.empty()) items.push_back(last);
  return items;
}

ConfigTable::Value parse_value(const std::string& raw, int line) {
  if (raw.empty()) fail(line, "missing value");
  if (raw[0] == '"') return parse_quoted(raw, line);
  if (raw == "true") return true;
  if (raw == "false") return false;
  if (raw[0] == '[') {
    if (raw.back() != ']') fail(line, "unterminated array " + raw);
    const auto items = split_array_items(raw.substr(1, raw.size() - 2), line);
    if (items.empty()) return std::vector<double>{};
    if (items[0][0] == '"') {
      std::vector<std::string> out;
      for (const auto& it : items) {
        if (it.empty() || it[0] != '"') fail(line, "mixed array types in " + raw);
        out.push_back(parse_quoted(it, line));
      }
      return out;
    }
    std::vector<double> out;
    for (const auto& it : items) out.push_back(parse_number(it, line));
    return out;
  }
  if (looks_numeric(raw)) return parse_number(raw, line);
  fail(line, "unrecognized value " + raw + " (strings need quotes)");
}

bool valid_key(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-' &&
        c != '.') {
      return false;
    }
  }
  return true;
}

}  // namespace

void ConfigTable::set(const std::string& key, Value v) {
  if (values_.count(key) == 0) order_.push_back(key);
  values_[key] = std::move(v);
}

const ConfigTable::Value& ConfigTable::at(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw DataError("config is missing key '" + key + "'");
  return it->second;
}

std::string ConfigTable::get_string(const std::string& key) const {
  const Value& v = at(key);
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  throw DataError("config key '" + key + "' is not a string");
}

double ConfigTable::get_double(const std::string& key) const {
  const Value& v = at(key);
  if (const auto* d = std::get_if<double>(&v)) return *d;
  throw DataError("config key '" + key + "' is not a number");
}

std::int64_t ConfigTable::get_int(const std::string& key) const {
  const double d = get_double(key);
  const double r = std::round(d);
  if (std::abs(d - r) > 1e-9 || std::abs(r) > 9.0e15) {
    throw DataError("config key '" + key + "' is not an integer");
  }
  return static_cast<std::int64_t>(r);
}

bool ConfigTable::get_bool(const std::string& key) const {
  const Value& v = at(key);
  if (const auto* b = std::get_if<bool>(&v)) return *b;
  throw DataError("config key '" + key + "' is not a boolean");
}

std::vector<double> ConfigTable::get_double_array(const std::string& key) const {
  const Value& v = at(key);
  if (const auto* a = std::get_if<std::vector<double>>(&v)) return *a;
  if (const auto* d = std::get_if<double>(&v)) return {*d};
  throw DataError("config key '" + key + "' is not a number array");
}

std::vector<std::string> ConfigTable::get_string_array(const std::string& key) const {
  const Value& v = at(key);
  if (const auto* a = std::get_if<std::vector<std::string>>(&v)) return *a;
  if (const auto* s = std::get_if<std::string>(&v)) return {*s};
  throw DataError("config key '" + key + "' is not a string array");
}

std::string ConfigTable::get_string(const std::string& key,
                                    const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}

double ConfigTable::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::int64_t ConfigTable::get_int(const std::string& key,
                                  std::int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}

bool ConfigTable::get_bool(const std::string& key, bool fallback) const {
  return has(key) ? get_bool(key) : fallback;
}

std::vector<std::string> ConfigTable::sections(const std::string& prefix) const {
  std::vector<std::string> out;
  const std::string p = prefix + ".";
  for (const auto& key : order_) {
    if (key.rfind(p, 0) != 0) continue;
    const size_t dot = key.find('.', p.size());
    const std::string name =
        dot == std::string::npos ? key.substr(p.size())
                                 : key.substr(p.size(), dot - p.size());
    bool seen = false;
    for (const auto& s : out) seen = seen || s == name;
    if (!seen) out.push_back(name);
  }
  return out;
}

ConfigTable parse_config(const std::string& text) {
  ConfigTable table;
  std::istringstream in(text);
  std::string raw_line;
  std::string section;
  int line = 0;
  while (std::getline(in, raw_line)) {
    ++line;
    const std::string body = strip(strip_comment(raw_line));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') fail(line, "unterminated section header " + body);
      section = strip(body.substr(1, body.size() - 2));
      if (!valid_key(section)) fail(line, "bad section name [" + section + "]");
      continue;
    }
    const size_t eq = body.find('=');
    if (eq == std::string::npos) fail(line, "expected key = value, got " + body);
    const std::string key = strip(body.substr(0, eq));
    if (!valid_key(key)) fail(line, "bad key '" + key + "'");
    const std::string full = section.empty() ? key : section + "." + key;
    if (table.has(full)) fail(line, "duplicate key '" + full + "'");
    table.set(full, parse_value(strip(body.substr(eq + 1)), line));
  }
  return table;
}

ConfigTable parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

}  // namespace lipcert
