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

#ifndef HEFL_RL_AGENT_HPP_
#define HEFL_RL_AGENT_HPP_

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hefl/client_profile.hpp"
#include "hefl/he_plan.hpp"
#include "hefl/rng.hpp"
#include "hefl/tiering.hpp"
#include "json.hpp"

namespace hefl {

// Observed condition of one tier: the strictest security requirement among
// its members and the bucket of its mean reference latency.
struct StateId {
  int security_band = 0;
  int latency_band = 0;

  std::string to_string() const;
  friend auto operator<=>(const StateId&, const StateId&) = default;
};

struct QLearningParams {
  double gamma = 0.1;    // learning rate
  double mu = 0.9;       // discount factor
  double epsilon = 0.1;  // exploration rate

  // Throws ConfigError unless gamma in (0,1], mu in [0,1), epsilon in [0,1].
  void validate() const;
};

// Dense (state, action) value store. Actions are the sorted plan grid, so
// action index order is lexicographic (log_n, q_bits) order.
class QTable {
 public:
  QTable(std::vector<ParameterPlan> actions, int latency_buckets, QLearningParams params);

  const std::vector<ParameterPlan>& actions() const { return actions_; }
  const QLearningParams& params() const { return params_; }
  int latency_buckets() const { return latency_buckets_; }
  std::size_t n_states() const { return 3 * static_cast<std::size_t>(latency_buckets_); }
  std::size_t n_actions() const { return actions_.size(); }

  bool covers(StateId s) const;
  double value(StateId s, std::size_t action) const { return values_[index(s, action)]; }
  void set(StateId s, std::size_t action, double v) { values_[index(s, action)] = v; }

  double max_value(StateId s) const;
  // Argmax over Q(s, .); ties go to the lowest index.
  std::size_t greedy(StateId s) const;

  // Every entry uniform in [0, max_value) from a stream derived from `seed`.
  void init_random(std::uint64_t seed, double max_value);

  std::size_t action_index(const ParameterPlan& plan) const;

  // {"params": ..., "latency_buckets": n, "actions": [...],
  //  "values": {"(s,l)->(log_n,q_bits)": v, ...}}
  nlohmann::json to_json() const;
  static QTable from_json(const nlohmann::json& j);

 private:
  std::size_t index(StateId s, std::size_t action) const;

  std::vector<ParameterPlan> actions_;
  int latency_buckets_;
  QLearningParams params_;
  std::vector<double> values_;
};

struct RewardConfig {
  double alpha = 5.0;  // security penalty per under-served client
};

struct ParticipantOutcome {
  ClientId id = 0;
  double delta_util = 0.0;
  int security_req = 128;
};

struct TierRoundObservation {
  int tier = 0;
  std::vector<ParticipantOutcome> participants;
  double round_time = 0.0;  // L_k, seconds
  int plan_security = 0;    // S_k, bits
};

// latency_edges must be strictly increasing; the band is the number of edges
// at or below the tier's mean latency, so a value on an edge goes up.
StateId discretize_state(std::span<const ClientId> members, const Population& pop,
                         std::span<const double> reference_latency,
                         std::span<const double> latency_edges);

// Epsilon-greedy. Always consumes exactly two draws from `rng` so the stream
// position never depends on table contents.
std::size_t select_action(const QTable& q, StateId s, Rng& rng);

// One tier's share of the reward:
//   sum_i dUtil_i / (|T_k| L_k) - alpha * #{i : S_k < S_i}
double tier_reward(const TierRoundObservation& obs, const RewardConfig& cfg);

// Sum of tier_reward over all tiers. Throws InputError on an empty list, an
// empty tier or a non-positive round time.
double compute_reward(std::span<const TierRoundObservation> obs, const RewardConfig& cfg);

// Q(s,a) += gamma * (r + mu * max_a' Q(s',a') - Q(s,a)); returns the new value.
double update_q(QTable& q, StateId s, std::size_t action, double reward, StateId s_next);

// Tabular Q-learning agent choosing one plan per tier per round.
class HerlAgent {
 public:
  struct Selection {
    int tier = 0;
    StateId state;
    std::size_t action = 0;
    ParameterPlan plan;
  };

  HerlAgent(QTable table, RewardConfig reward, std::vector<double> latency_edges,
            std::uint64_t seed);

  // Observes each tier's state and picks its action. One entry per tier.
  std::vector<Selection> param_selection(const Tiering& tiers, const Population& pop,
                                         std::span<const double> reference_latency);

  // Applies one Q update per observed tier using that tier's own reward.
  // `next_states` is indexed by tier. Returns the rewards, parallel to `obs`.
  std::vector<double> learn(std::span<const Selection> selections,
                            std::span<const TierRoundObservation> obs,
                            std::span<const StateId> next_states);

  const QTable& table() const { return table_; }
  const RewardConfig& reward_config() const { return reward_; }
  const std::vector<double>& latency_edges() const { return edges_; }

 private:
  QTable table_;
  RewardConfig reward_;
  std::vector<double> edges_;
  Rng rng_;
};

}  // namespace hefl

#endif  // HEFL_RL_AGENT_HPP_
