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

#ifndef HEFL_TIERING_HPP_
#define HEFL_TIERING_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hefl/client_profile.hpp"
#include "json.hpp"

namespace hefl {

enum class CriterionKind { kSecurity, kLatency, kUtility };

std::string to_string(CriterionKind kind);
CriterionKind parse_criterion_kind(const std::string& name);

// A named scalar key over client profiles. The extractor must be total over
// every client the tiering will ever see, including clients assigned later.
struct Criterion {
  CriterionKind kind = CriterionKind::kSecurity;
  std::function<double(const ClientProfile&)> extractor;

  std::string name() const { return to_string(kind); }
  double key(const ClientProfile& c) const { return extractor(c); }
};

Criterion security_criterion();
Criterion latency_criterion(std::function<double(const ClientProfile&)> key);
Criterion utility_criterion(std::function<double(const ClientProfile&)> key);

// Disjoint client groups covering a population.
struct Tiering {
  std::vector<std::vector<ClientId>> tiers;
  std::vector<Criterion> criteria;
  // One entry per split performed: the key values separating adjacent bands.
  std::vector<std::vector<double>> boundaries;
  // Mean criterion-key vector per tier (empty for empty tiers) and the
  // per-criterion normalization used by assign_new_client.
  std::vector<std::vector<double>> centroids;
  std::vector<double> scales;
  // Criterion-key vector of every member, parallel to `tiers`.
  std::vector<std::vector<std::vector<double>>> member_keys;

  std::size_t size() const { return tiers.size(); }
  // Tier index holding `id`, or -1.
  int tier_of(ClientId id) const;
};

// Splits the population on each criterion in turn, every current sub-tier
// into m = K^(1/beta) bands. Security bands are fixed ranges ([128,192) and
// [192,256] for m=2, one band per level for m=3); every other split uses
// per-sub-tier quantiles with ties broken by client id.
// Throws InputError when K is not m^beta for an integer m >= 2 (K=1 is a
// single tier).
Tiering hierarchical_tiering(const Population& pop, const std::vector<Criterion>& criteria, int k);

// K quantile bands of mean past round latency, fastest first.
Tiering roundtime_tiering(const Population& pop, int k, std::span<const double> history);

// K quantile bands of mean recent utility gain, lowest first.
Tiering utility_tiering(const Population& pop, int k, std::span<const double> utility_history);

// Seeded shuffle, then contiguous chunks whose sizes differ by at most one.
// `criteria` only feeds assign_new_client; defaults to {security}.
Tiering random_tiering(const Population& pop, int k, std::uint64_t seed,
                       std::vector<Criterion> criteria = {});

// Members keep their tier. Otherwise a client whose key vector equals some
// member's goes to that member's tier; any other client goes to the tier with
// the nearest centroid in range-normalized Euclidean distance. Ties go to the
// lowest tier index.
int assign_new_client(const Tiering& t, const ClientProfile& client);

// Valid hierarchical tier counts m^beta near `k`, for error messages.
std::vector<int> valid_tier_counts(int beta, int around, int how_many = 3);

nlohmann::json to_json(const Tiering& t);

}  // namespace hefl

#endif  // HEFL_TIERING_HPP_
