/*
 * Copyright 2026 The hefl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef HEFL_KV_CONFIG_HPP_
#define HEFL_KV_CONFIG_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hefl {

// A parsed INI-style document:
//
//   # comment
//   [section]
//   key = value
//
// Keys before the first section header land in section "". Duplicate keys
// within a section are a parse error. Line numbers are kept for diagnostics.
class KvDocument {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  static KvDocument parse(std::string_view text, std::string source = "<string>");
  static KvDocument load(const std::filesystem::path& path);

  const std::string& source() const { return source_; }
  // Directory that relative paths inside the document resolve against.
  const std::filesystem::path& base_dir() const { return base_dir_; }

  bool empty() const { return sections_.empty(); }
  bool has_section(const std::string& section) const;
  const Entry* find(const std::string& section, const std::string& key) const;

  std::vector<std::string> section_names() const;
  std::vector<std::string> keys(const std::string& section) const;

  // Returns a value-only copy of one section, in key order.
  std::map<std::string, std::string> section(const std::string& name) const;

 private:
  std::string source_;
  std::filesystem::path base_dir_;
  std::map<std::string, std::map<std::string, Entry>> sections_;
};

// Scalar conversions. All throw InputError on malformed text.
double parse_double(std::string_view text);
long long parse_int(std::string_view text);
bool parse_bool(std::string_view text);

// Comma-separated lists. Empty items are rejected.
std::vector<std::string> split_list(std::string_view text);
std::vector<double> parse_double_list(std::string_view text);
std::vector<long long> parse_int_list(std::string_view text);

std::string trim(std::string_view text);

}  // namespace hefl

#endif  // HEFL_KV_CONFIG_HPP_
