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

#include "hefl/he_plan.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "hefl/error.hpp"
#include "hefl/kv_config.hpp"

namespace hefl {

int security_level_index(int bits) {
  for (std::size_t i = 0; i < kSecurityLevels.size(); ++i) {
    if (kSecurityLevels[i] == bits) return static_cast<int>(i);
  }
  return -1;
}

std::string ParameterPlan::to_string() const {
  return std::to_string(log_n) + ":" + std::to_string(q_bits);
}

ParameterPlan ParameterPlan::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw InputError("plan must look like 'log_n:q_bits', got '" + std::string(text) + "'");
  }
  return ParameterPlan{static_cast<int>(parse_int(text.substr(0, colon))),
                       static_cast<int>(parse_int(text.substr(colon + 1)))};
}

SecurityTable::SecurityTable(std::vector<Row> rows) : rows_(std::move(rows)) {
  std::sort(rows_.begin(), rows_.end(), [](const Row& a, const Row& b) {
    return std::tie(a.log_n, a.security_bits) < std::tie(b.log_n, b.security_bits);
  });
  std::map<int, std::vector<const Row*>> by_n;
  for (const auto& r : rows_) {
    if (security_level_index(r.security_bits) < 0) {
      throw ConfigError("security table: unsupported level " + std::to_string(r.security_bits));
    }
    if (r.max_q_bits <= 0) {
      throw ConfigError("security table: non-positive bound for log_n=" + std::to_string(r.log_n));
    }
    by_n[r.log_n].push_back(&r);
  }
  for (const auto& [log_n, row_list] : by_n) {
    if (row_list.size() != kSecurityLevels.size()) {
      throw ConfigError("security table: log_n=" + std::to_string(log_n) +
                        " must list exactly one bound per level");
    }
    for (std::size_t i = 1; i < row_list.size(); ++i) {
      if (row_list[i]->security_bits == row_list[i - 1]->security_bits) {
        throw ConfigError("security table: duplicate level for log_n=" + std::to_string(log_n));
      }
      if (row_list[i]->max_q_bits >= row_list[i - 1]->max_q_bits) {
        throw ConfigError("security table: bounds must strictly decrease with level (log_n=" +
                          std::to_string(log_n) + ")");
      }
    }
  }
  for (auto it = by_n.begin(); it != by_n.end(); ++it) {
    auto next = std::next(it);
    if (next == by_n.end()) break;
    for (std::size_t i = 0; i < kSecurityLevels.size(); ++i) {
      if (next->second[i]->max_q_bits <= it->second[i]->max_q_bits) {
        throw ConfigError("security table: bounds must strictly increase with log_n (level " +
                          std::to_string(kSecurityLevels[i]) + ")");
      }
    }
  }
}

SecurityTable SecurityTable::from_document(const KvDocument& doc) {
  if (!doc.has_section("security_table")) {
    throw ConfigError(doc.source() + ": missing [security_table] section");
  }
  std::vector<Row> rows;
  for (const auto& key : doc.keys("security_table")) {
    const auto* entry = doc.find("security_table", key);
    int log_n = 0;
    std::vector<long long> bounds;
    try {
      log_n = static_cast<int>(parse_int(key));
      bounds = parse_int_list(entry->value);
    } catch (const InputError& e) {
      throw ParseError(doc.source(), entry->line, e.what());
    }
    if (bounds.size() != kSecurityLevels.size()) {
      throw ParseError(doc.source(), entry->line,
                       "expected bounds for 128, 192 and 256 bits");
    }
    for (std::size_t i = 0; i < bounds.size(); ++i) {
      rows.push_back(Row{log_n, kSecurityLevels[i], static_cast<int>(bounds[i])});
    }
  }
  return SecurityTable(std::move(rows));
}

SecurityTable SecurityTable::load(const std::filesystem::path& path) {
  return from_document(KvDocument::load(path));
}

bool SecurityTable::covers(int log_n) const {
  return std::any_of(rows_.begin(), rows_.end(), [&](const Row& r) { return r.log_n == log_n; });
}

int SecurityTable::max_q_bits(int log_n, int security_bits) const {
  for (const auto& r : rows_) {
    if (r.log_n == log_n && r.security_bits == security_bits) return r.max_q_bits;
  }
  throw ConfigError("security table has no row for log_n=" + std::to_string(log_n) +
                    " at " + std::to_string(security_bits) + " bits");
}

std::vector<int> SecurityTable::log_ns() const {
  std::vector<int> out;
  for (const auto& r : rows_) {
    if (out.empty() || out.back() != r.log_n) out.push_back(r.log_n);
  }
  return out;
}

void CostModel::validate() const {
  if (!(he_coeff > 0) || !(overhead_bits > 0) || !(depth > 0) || !(precision_coeff > 0)) {
    throw ConfigError("cost model coefficients must all be strictly positive");
  }
}

CostModel CostModel::from_document(const KvDocument& doc) {
  CostModel m;
  const std::map<std::string, double*> fields = {
      {"he_coeff", &m.he_coeff},
      {"overhead_bits", &m.overhead_bits},
      {"depth", &m.depth},
      {"precision_coeff", &m.precision_coeff},
  };
  for (const auto& key : doc.keys("cost_model")) {
    const auto* entry = doc.find("cost_model", key);
    auto field = fields.find(key);
    if (field == fields.end()) {
      throw ParseError(doc.source(), entry->line, "unknown key '" + key + "' in [cost_model]");
    }
    try {
      *field->second = parse_double(entry->value);
    } catch (const InputError& e) {
      throw ParseError(doc.source(), entry->line, e.what());
    }
  }
  m.validate();
  return m;
}

PlanVerdict validate_plan(const ParameterPlan& plan, const SecurityTable& table) {
  if (!table.covers(plan.log_n)) {
    throw ConfigError("security table does not cover log_n=" + std::to_string(plan.log_n));
  }
  const int bound = table.max_q_bits(plan.log_n, kSecurityLevels.front());
  if (plan.q_bits <= 0) {
    return {false, 0, "q_bits must be positive, got " + std::to_string(plan.q_bits)};
  }
  if (plan.q_bits > bound) {
    return {false, bound,
            "q_bits=" + std::to_string(plan.q_bits) + " exceeds the 128-bit bound " +
                std::to_string(bound) + " for log_n=" + std::to_string(plan.log_n)};
  }
  return {true, bound, {}};
}

int security_bits(const ParameterPlan& plan, const SecurityTable& table) {
  int level = 0;
  for (int s : kSecurityLevels) {
    if (plan.q_bits <= table.max_q_bits(plan.log_n, s)) level = s;
  }
  return level;
}

std::uint64_t ciphertext_count(const ParameterPlan& plan, std::uint64_t n_params) {
  const auto slots = plan.slots();
  return (n_params + slots - 1) / slots;
}

std::uint64_t ciphertext_bytes(const ParameterPlan& plan, std::uint64_t n_params) {
  const auto bits = ciphertext_count(plan, n_params) * 2 * plan.degree() *
                    static_cast<std::uint64_t>(plan.q_bits);
  return bits / 8;
}

double he_latency(const ParameterPlan& plan, const CostModel& model, double client_speed,
                  std::uint64_t n_params) {
  const double units = static_cast<double>(plan.degree()) * plan.log_n * plan.q_bits;
  return static_cast<double>(ciphertext_count(plan, n_params)) * model.he_coeff * units /
         client_speed;
}

double precision_bits(const ParameterPlan& plan, const CostModel& model) {
  return std::max(0.0, (plan.q_bits - model.overhead_bits) / (model.depth + 1.0));
}

double precision_penalty(const ParameterPlan& plan, const CostModel& model) {
  return std::min(1.0, model.precision_coeff * std::exp2(-precision_bits(plan, model)));
}

std::vector<ParameterPlan> build_plan_grid(const std::vector<int>& log_ns,
                                           const std::vector<int>& q_bits,
                                           const SecurityTable& table) {
  std::vector<ParameterPlan> grid;
  for (int n : log_ns) {
    for (int q : q_bits) {
      ParameterPlan p{n, q};
      if (validate_plan(p, table)) grid.push_back(p);
    }
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

}  // namespace hefl
