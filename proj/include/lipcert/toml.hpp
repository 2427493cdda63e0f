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

#ifndef LIPCERT_TOML_HPP_
#define LIPCERT_TOML_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "lipcert/types.hpp"

namespace lipcert {

// Config files use a small TOML subset: [section] and [section.sub] headers,
// `key = value` lines, # comments, and values that are quoted strings,
// numbers, booleans, or flat arrays of those. Keys are stored flattened as
// "section.sub.key".
class ConfigTable {
 public:
  using Value = std::variant<std::string, double, bool, std::vector<double>,
                             std::vector<std::string>>;

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<double> get_double_array(const std::string& key) const;
  std::vector<std::string> get_string_array(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // Keys under `prefix.` in file order, e.g. sections("train") lists the
  // configured training methods.
  std::vector<std::string> sections(const std::string& prefix) const;

  const std::map<std::string, Value>& entries() const { return values_; }
  void set(const std::string& key, Value v);

 private:
  const Value& at(const std::string& key) const;
  std::map<std::string, Value> values_;
  std::vector<std::string> order_;
};

ConfigTable parse_config(const std::string& text);
ConfigTable parse_config_file(const std::string& path);

}  // namespace lipcert

#endif  // LIPCERT_TOML_HPP_
