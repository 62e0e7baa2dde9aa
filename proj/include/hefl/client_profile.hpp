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

#ifndef HEFL_CLIENT_PROFILE_HPP_
#define HEFL_CLIENT_PROFILE_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "hefl/he_plan.hpp"
#include "json.hpp"

namespace hefl {

using ClientId = std::uint32_t;

struct ClientProfile {
  ClientId id = 0;
  double compute_speed = 1.0;    // relative to the reference device
  double bandwidth = 1.0;        // bytes per second
  std::uint64_t data_size = 1;   // local sample count
  int security_req = 128;        // bits, one of kSecurityLevels
  double base_train_time = 0.0;  // seconds per local epoch on the reference device
};

// A fixed client set. Ids are 0..n-1 and equal the client's index.
struct Population {
  std::vector<ClientProfile> clients;
  std::uint64_t seed = 0;

  std::size_t size() const { return clients.size(); }
  const ClientProfile& operator[](ClientId id) const { return clients.at(id); }

  // Throws InputError on an empty population, duplicate or non-dense ids, or
  // a profile field outside its domain.
  void validate() const;
};

// Reads a CSV trace with header `compute_speed,bandwidth_bps,base_train_time_s`
// (any column order). With at least n_clients rows, n_clients distinct rows
// are drawn; otherwise rows are drawn with replacement. Deterministic in
// (file contents, n_clients, seed).
Population load_traces(const std::filesystem::path& path, std::size_t n_clients,
                       std::uint64_t seed);

// Per-client security levels drawn from weights over {128, 192, 256}.
Population assign_security(Population pop, const std::array<double, 3>& weights,
                           std::uint64_t seed);

// data_size_i = max(1, round(total_samples * w_i)) with w ~ Dirichlet(alpha).
Population assign_dirichlet_sizes(Population pop, std::uint64_t total_samples, double alpha,
                                  std::uint64_t seed);
Population assign_equal_sizes(Population pop, std::uint64_t samples_per_client);

struct LatencyBreakdown {
  double training = 0.0;
  double he = 0.0;
  double communication = 0.0;

  double total() const { return training + he + communication; }
};

LatencyBreakdown latency_breakdown(const ClientProfile& client, const ParameterPlan& plan,
                                   const CostModel& model, std::uint64_t n_params);

// training + HE + upload time of one round for one client.
double estimate_round_latency(const ClientProfile& client, const ParameterPlan& plan,
                              const CostModel& model, std::uint64_t n_params);

nlohmann::json to_json(const ClientProfile& c);
nlohmann::json to_json(const Population& pop);

}  // namespace hefl

#endif  // HEFL_CLIENT_PROFILE_HPP_
