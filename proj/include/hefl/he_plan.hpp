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

#ifndef HEFL_HE_PLAN_HPP_
#define HEFL_HE_PLAN_HPP_

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace hefl {

class KvDocument;

// Standardized lattice security levels, in bits.
inline constexpr std::array<int, 3> kSecurityLevels = {128, 192, 256};

// Index of `bits` in kSecurityLevels, or -1.
int security_level_index(int bits);

// A CKKS parameter plan: ring degree 2^log_n and a total coefficient-modulus
// bit length. Ordered lexicographically by (log_n, q_bits).
struct ParameterPlan {
  int log_n = 0;
  int q_bits = 0;

  std::uint64_t degree() const { return std::uint64_t{1} << log_n; }
  std::uint64_t slots() const { return degree() / 2; }

  // "13:100"
  std::string to_string() const;
  static ParameterPlan parse(std::string_view text);

  friend auto operator<=>(const ParameterPlan&, const ParameterPlan&) = default;
};

// Largest coefficient-modulus bit length admissible for each (log_n, level).
// This is data: the shipped default mirrors the community HE security
// standard for ternary secrets, and deployments can swap the file.
class SecurityTable {
 public:
  struct Row {
    int log_n = 0;
    int security_bits = 0;
    int max_q_bits = 0;
  };

  SecurityTable() = default;
  // Throws ConfigError when rows violate the monotonicity invariants or do not
  // cover every level for a listed log_n.
  explicit SecurityTable(std::vector<Row> rows);

  // Reads the [security_table] section: `<log_n> = <q128>, <q192>, <q256>`.
  static SecurityTable from_document(const KvDocument& doc);
  static SecurityTable load(const std::filesystem::path& path);

  bool empty() const { return rows_.empty(); }
  bool covers(int log_n) const;
  // Throws ConfigError for an unknown log_n or level.
  int max_q_bits(int log_n, int security_bits) const;

  const std::vector<Row>& rows() const { return rows_; }
  std::vector<int> log_ns() const;

 private:
  std::vector<Row> rows_;  // sorted by (log_n, security_bits)
};

// Calibrated stand-in for CKKS cost and precision.
//
// latency   = n_ct * he_coeff * 2^log_n * log_n * q_bits / client_speed
// precision = max(0, (q_bits - overhead_bits) / (depth + 1)) bits
// penalty   = min(1, precision_coeff * 2^-precision)
struct CostModel {
  double he_coeff = 1e-9;
  double overhead_bits = 20.0;
  double depth = 1.0;
  double precision_coeff = 1.0;

  // Throws ConfigError unless every coefficient is strictly positive.
  void validate() const;

  // Reads the [cost_model] section; keys absent from it keep their defaults.
  static CostModel from_document(const KvDocument& doc);
};

struct PlanVerdict {
  bool valid = false;
  // Upper bound that was violated (0 when q_bits was non-positive).
  int bound = 0;
  std::string reason;

  explicit operator bool() const { return valid; }
};

// Accepts iff 0 < q_bits <= max_q_bits(log_n, 128). Throws ConfigError when
// the table does not cover plan.log_n.
PlanVerdict validate_plan(const ParameterPlan& plan, const SecurityTable& table);

// Largest level s with q_bits <= max_q_bits(log_n, s); 0 if none.
int security_bits(const ParameterPlan& plan, const SecurityTable& table);

std::uint64_t ciphertext_count(const ParameterPlan& plan, std::uint64_t n_params);

// Two ring elements of 2^log_n coefficients, q_bits each, per ciphertext.
std::uint64_t ciphertext_bytes(const ParameterPlan& plan, std::uint64_t n_params);

double he_latency(const ParameterPlan& plan, const CostModel& model,
                  double client_speed, std::uint64_t n_params);

double precision_bits(const ParameterPlan& plan, const CostModel& model);
double precision_penalty(const ParameterPlan& plan, const CostModel& model);

// Cartesian product of the two axes, filtered by validate_plan and sorted.
std::vector<ParameterPlan> build_plan_grid(const std::vector<int>& log_ns,
                                           const std::vector<int>& q_bits,
                                           const SecurityTable& table);

}  // namespace hefl

#endif  // HEFL_HE_PLAN_HPP_
