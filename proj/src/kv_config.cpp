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

#include "hefl/kv_config.hpp"

#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "hefl/error.hpp"

namespace hefl {

std::string trim(std::string_view text) {
  const auto* ws = " \t\r\n";
  const auto begin = text.find_first_not_of(ws);
  if (begin == std::string_view::npos) return {};
  const auto end = text.find_last_not_of(ws);
  return std::string(text.substr(begin, end - begin + 1));
}

KvDocument KvDocument::parse(std::string_view text, std::string source) {
  KvDocument doc;
  doc.source_ = std::move(source);
  std::string current;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty() || line[0] == '#' || line[0] == ';') {
      if (nl == text.size()) break;
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ParseError(doc.source_, line_no, "malformed section header '" + line + "'");
      }
      current = trim(std::string_view(line).substr(1, line.size() - 2));
      doc.sections_[current];
    } else {
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw ParseError(doc.source_, line_no, "expected 'key = value', got '" + line + "'");
      }
      std::string key = trim(std::string_view(line).substr(0, eq));
      std::string value = trim(std::string_view(line).substr(eq + 1));
      // Trailing comments.
      if (auto hash = value.find(" #"); hash != std::string::npos) value = trim(value.substr(0, hash));
      if (key.empty()) throw ParseError(doc.source_, line_no, "empty key");
      auto& sec = doc.sections_[current];
      if (sec.contains(key)) {
        throw ParseError(doc.source_, line_no, "duplicate key '" + key + "' in [" + current + "]");
      }
      sec.emplace(std::move(key), Entry{std::move(value), line_no});
    }
    if (nl == text.size()) break;
  }
  return doc;
}

KvDocument KvDocument::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  auto doc = parse(buffer.str(), path.string());
  doc.base_dir_ = path.parent_path();
  return doc;
}

bool KvDocument::has_section(const std::string& section) const {
  return sections_.contains(section);
}

const KvDocument::Entry* KvDocument::find(const std::string& section,
                                          const std::string& key) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) return nullptr;
  auto k = s->second.find(key);
  return k == s->second.end() ? nullptr : &k->second;
}

std::vector<std::string> KvDocument::section_names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : sections_) out.push_back(name);
  return out;
}

std::vector<std::string> KvDocument::keys(const std::string& section) const {
  std::vector<std::string> out;
  if (auto s = sections_.find(section); s != sections_.end()) {
    for (const auto& [key, _] : s->second) out.push_back(key);
  }
  return out;
}

std::map<std::string, std::string> KvDocument::section(const std::string& name) const {
  std::map<std::string, std::string> out;
  if (auto s = sections_.find(name); s != sections_.end()) {
    for (const auto& [key, entry] : s->second) out.emplace(key, entry.value);
  }
  return out;
}

double parse_double(std::string_view text) {
  const std::string s = trim(text);
  if (s.empty()) throw InputError("expected a number, got ''");
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE) {
    throw InputError("expected a number, got '" + s + "'");
  }
  return v;
}

long long parse_int(std::string_view text) {
  const std::string s = trim(text);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw InputError("expected an integer, got '" + s + "'");
  }
  return v;
}

bool parse_bool(std::string_view text) {
  const std::string s = trim(text);
  if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
  if (s == "false" || s == "no" || s == "off" || s == "0") return false;
  throw InputError("expected a boolean, got '" + s + "'");
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  if (trim(text).empty()) return out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = text.find(',', pos);
    std::string item = trim(text.substr(pos, comma == std::string_view::npos ? std::string_view::npos
                                                                             : comma - pos));
    if (item.empty()) throw InputError("empty item in list '" + std::string(text) + "'");
    out.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::vector<double> parse_double_list(std::string_view text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(parse_double(item));
  return out;
}

std::vector<long long> parse_int_list(std::string_view text) {
  std::vector<long long> out;
  for (const auto& item : split_list(text)) out.push_back(parse_int(item));
  return out;
}

}  // namespace hefl
