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

#include "hefl/tiering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "hefl/error.hpp"
#include "hefl/rng.hpp"

namespace hefl {

std::string to_string(CriterionKind kind) {
  switch (kind) {
    case CriterionKind::kSecurity: return "security";
    case CriterionKind::kLatency: return "latency";
    case CriterionKind::kUtility: return "utility";
  }
  return "?";
}

CriterionKind parse_criterion_kind(const std::string& name) {
  if (name == "security") return CriterionKind::kSecurity;
  if (name == "latency") return CriterionKind::kLatency;
  if (name == "utility") return CriterionKind::kUtility;
  throw InputError("unknown tiering criterion '" + name + "'");
}

Criterion security_criterion() {
  return {CriterionKind::kSecurity,
          [](const ClientProfile& c) { return static_cast<double>(c.security_req); }};
}

Criterion latency_criterion(std::function<double(const ClientProfile&)> key) {
  return {CriterionKind::kLatency, std::move(key)};
}

Criterion utility_criterion(std::function<double(const ClientProfile&)> key) {
  return {CriterionKind::kUtility, std::move(key)};
}

int Tiering::tier_of(ClientId id) const {
  for (std::size_t t = 0; t < tiers.size(); ++t) {
    if (std::find(tiers[t].begin(), tiers[t].end(), id) != tiers[t].end()) {
      return static_cast<int>(t);
    }
  }
  return -1;
}

namespace {

using Group = std::vector<ClientId>;

// Chunk sizes for n items into m parts, larger parts first.
std::vector<std::size_t> chunk_sizes(std::size_t n, std::size_t m) {
  std::vector<std::size_t> sizes(m, n / m);
  for (std::size_t i = 0; i < n % m; ++i) ++sizes[i];
  return sizes;
}

// Sorts `group` by (key, id) and cuts it into m contiguous chunks.
std::vector<Group> quantile_split(const Group& group, const std::vector<double>& keys,
                                  std::size_t m, std::vector<double>& cuts) {
  Group sorted = group;
  std::sort(sorted.begin(), sorted.end(), [&](ClientId a, ClientId b) {
    return keys[a] != keys[b] ? keys[a] < keys[b] : a < b;
  });
  std::vector<Group> out;
  std::size_t pos = 0;
  for (auto size : chunk_sizes(sorted.size(), m)) {
    out.emplace_back(sorted.begin() + pos, sorted.begin() + pos + size);
    pos += size;
    if (!out.back().empty() && pos < sorted.size()) cuts.push_back(keys[out.back().back()]);
  }
  return out;
}

std::vector<Group> security_split(const Group& group, const std::vector<double>& keys,
                                  std::size_t m, std::vector<double>& cuts) {
  std::vector<Group> out(m);
  for (ClientId id : group) {
    const double s = keys[id];
    std::size_t band = 0;
    if (m == 2) {
      band = s < 192 ? 0 : 1;
    } else {
      band = s < 192 ? 0 : (s < 256 ? 1 : 2);
    }
    out[band].push_back(id);
  }
  if (m == 2) {
    cuts.push_back(192);
  } else {
    cuts.push_back(192);
    cuts.push_back(256);
  }
  for (auto& g : out) std::sort(g.begin(), g.end());
  return out;
}

std::vector<double> keys_for(const Population& pop, const Criterion& c) {
  std::vector<double> keys(pop.size());
  for (const auto& client : pop.clients) keys[client.id] = c.key(client);
  return keys;
}

void finalize(Tiering& t, const Population& pop) {
  const std::size_t dims = t.criteria.size();
  std::vector<std::vector<double>> keys;
  for (const auto& c : t.criteria) keys.push_back(keys_for(pop, c));

  t.scales.assign(dims, 1.0);
  for (std::size_t d = 0; d < dims; ++d) {
    const auto [lo, hi] = std::minmax_element(keys[d].begin(), keys[d].end());
    if (lo != keys[d].end() && *hi > *lo) t.scales[d] = *hi - *lo;
  }
  t.centroids.assign(t.tiers.size(), {});
  t.member_keys.assign(t.tiers.size(), {});
  for (std::size_t k = 0; k < t.tiers.size(); ++k) {
    if (t.tiers[k].empty()) continue;
    std::vector<double> c(dims, 0.0);
    for (ClientId id : t.tiers[k]) {
      std::vector<double> member(dims);
      for (std::size_t d = 0; d < dims; ++d) {
        member[d] = keys[d][id];
        c[d] += member[d];
      }
      t.member_keys[k].push_back(std::move(member));
    }
    for (auto& v : c) v /= static_cast<double>(t.tiers[k].size());
    t.centroids[k] = std::move(c);
  }
}

Group all_ids(const Population& pop) {
  Group ids(pop.size());
  std::iota(ids.begin(), ids.end(), ClientId{0});
  return ids;
}

void require_k(int k) {
  if (k < 1) throw InputError("tier count must be at least 1, got " + std::to_string(k));
}

Tiering band_tiering(const Population& pop, int k, Criterion criterion) {
  require_k(k);
  pop.validate();
  Tiering t;
  const auto keys = keys_for(pop, criterion);
  t.criteria.push_back(std::move(criterion));
  std::vector<double> cuts;
  t.tiers = quantile_split(all_ids(pop), keys, static_cast<std::size_t>(k), cuts);
  t.boundaries.push_back(std::move(cuts));
  finalize(t, pop);
  return t;
}

std::function<double(const ClientProfile&)> lookup(std::span<const double> values) {
  return [v = std::vector<double>(values.begin(), values.end())](const ClientProfile& c) {
    return c.id < v.size() ? v[c.id] : 0.0;
  };
}

}  // namespace

std::vector<int> valid_tier_counts(int beta, int around, int how_many) {
  std::vector<std::pair<int, int>> candidates;  // (distance, K)
  for (int m = 2; m <= 64; ++m) {
    const double kd = std::pow(static_cast<double>(m), beta);
    if (kd > 1e7) break;
    const int kk = static_cast<int>(kd);
    candidates.emplace_back(std::abs(kk - around), kk);
  }
  std::sort(candidates.begin(), candidates.end());
  std::vector<int> out;
  for (int i = 0; i < how_many && i < static_cast<int>(candidates.size()); ++i) {
    out.push_back(candidates[i].second);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Tiering hierarchical_tiering(const Population& pop, const std::vector<Criterion>& criteria, int k) {
  require_k(k);
  pop.validate();
  if (criteria.empty()) throw InputError("hierarchical tiering needs at least one criterion");
  const int beta = static_cast<int>(criteria.size());

  int m = 1;
  if (k > 1) {
    m = static_cast<int>(std::lround(std::pow(static_cast<double>(k), 1.0 / beta)));
    long long check = 1;
    for (int i = 0; i < beta; ++i) check *= m;
    if (m < 2 || check != k) {
      std::ostringstream msg;
      msg << "K=" << k << " is not m^" << beta << " for an integer m >= 2; try K in {";
      const auto valid = valid_tier_counts(beta, k);
      for (std::size_t i = 0; i < valid.size(); ++i) msg << (i ? "," : "") << valid[i];
      msg << "}";
      throw InputError(msg.str());
    }
  }

  Tiering t;
  t.criteria = criteria;
  std::vector<Group> groups{all_ids(pop)};
  if (m > 1) {
    for (const auto& criterion : criteria) {
      const auto keys = keys_for(pop, criterion);
      std::vector<Group> next;
      std::vector<double> cuts;
      for (const auto& g : groups) {
        auto parts = criterion.kind == CriterionKind::kSecurity && (m == 2 || m == 3)
                         ? security_split(g, keys, static_cast<std::size_t>(m), cuts)
                         : quantile_split(g, keys, static_cast<std::size_t>(m), cuts);
        for (auto& p : parts) next.push_back(std::move(p));
      }
      groups = std::move(next);
      t.boundaries.push_back(std::move(cuts));
    }
  }
  t.tiers = std::move(groups);
  finalize(t, pop);
  return t;
}

Tiering roundtime_tiering(const Population& pop, int k, std::span<const double> history) {
  if (history.size() < pop.size()) throw InputError("latency history must cover every client");
  return band_tiering(pop, k, latency_criterion(lookup(history)));
}

Tiering utility_tiering(const Population& pop, int k, std::span<const double> utility_history) {
  if (utility_history.size() < pop.size()) {
    throw InputError("utility history must cover every client");
  }
  return band_tiering(pop, k, utility_criterion(lookup(utility_history)));
}

Tiering random_tiering(const Population& pop, int k, std::uint64_t seed,
                       std::vector<Criterion> criteria) {
  require_k(k);
  pop.validate();
  if (static_cast<std::size_t>(k) > pop.size()) {
    throw InputError("cannot split " + std::to_string(pop.size()) + " clients into " +
                     std::to_string(k) + " tiers");
  }
  Group ids = all_ids(pop);
  auto rng = make_rng(seed, {tag(Stream::kTiering)});
  for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[uniform_index(rng, i)]);

  Tiering t;
  t.criteria = criteria.empty() ? std::vector<Criterion>{security_criterion()} : std::move(criteria);
  std::size_t pos = 0;
  for (auto size : chunk_sizes(ids.size(), static_cast<std::size_t>(k))) {
    Group g(ids.begin() + pos, ids.begin() + pos + size);
    std::sort(g.begin(), g.end());
    t.tiers.push_back(std::move(g));
    pos += size;
  }
  finalize(t, pop);
  return t;
}

int assign_new_client(const Tiering& t, const ClientProfile& client) {
  if (t.tiers.empty()) throw InputError("cannot assign into an empty tiering");
  if (int member = t.tier_of(client.id); member >= 0) return member;

  std::vector<double> key;
  for (const auto& c : t.criteria) key.push_back(c.key(client));

  for (std::size_t k = 0; k < t.tiers.size(); ++k) {
    for (const auto& member : t.member_keys[k]) {
      if (member == key) return static_cast<int>(k);
    }
  }

  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < t.tiers.size(); ++k) {
    if (t.centroids[k].empty()) continue;
    double d2 = 0;
    for (std::size_t d = 0; d < key.size(); ++d) {
      const double diff = (key[d] - t.centroids[k][d]) / t.scales[d];
      d2 += diff * diff;
    }
    if (d2 < best_d) {
      best_d = d2;
      best = static_cast<int>(k);
    }
  }
  return best < 0 ? 0 : best;
}

nlohmann::json to_json(const Tiering& t) {
  nlohmann::json out;
  out["k"] = t.tiers.size();
  out["criteria"] = nlohmann::json::array();
  for (const auto& c : t.criteria) out["criteria"].push_back(c.name());
  out["boundaries"] = t.boundaries;
  out["tiers"] = t.tiers;
  return out;
}

}  // namespace hefl
