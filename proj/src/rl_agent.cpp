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

#include "hefl/rl_agent.hpp"

#include <algorithm>
#include <cstdio>

#include "hefl/error.hpp"

namespace hefl {

std::string StateId::to_string() const {
  return "(" + std::to_string(security_band) + "," + std::to_string(latency_band) + ")";
}

void QLearningParams::validate() const {
  if (!(gamma > 0 && gamma <= 1)) throw ConfigError("gamma must lie in (0, 1]");
  if (!(mu >= 0 && mu < 1)) throw ConfigError("mu must lie in [0, 1)");
  if (!(epsilon >= 0 && epsilon <= 1)) throw ConfigError("epsilon must lie in [0, 1]");
}

QTable::QTable(std::vector<ParameterPlan> actions, int latency_buckets, QLearningParams params)
    : actions_(std::move(actions)), latency_buckets_(latency_buckets), params_(params) {
  params_.validate();
  if (actions_.empty()) throw ConfigError("action grid is empty");
  if (latency_buckets_ < 1) throw ConfigError("need at least one latency bucket");
  if (!std::is_sorted(actions_.begin(), actions_.end()) ||
      std::adjacent_find(actions_.begin(), actions_.end()) != actions_.end()) {
    throw ConfigError("action grid must be sorted and duplicate-free");
  }
  values_.assign(n_states() * n_actions(), 0.0);
}

bool QTable::covers(StateId s) const {
  return s.security_band >= 0 && s.security_band < 3 && s.latency_band >= 0 &&
         s.latency_band < latency_buckets_;
}

std::size_t QTable::index(StateId s, std::size_t action) const {
  if (!covers(s) || action >= actions_.size()) {
    throw InputError("Q-table has no entry for state " + s.to_string() + ", action " +
                     std::to_string(action));
  }
  const auto state = static_cast<std::size_t>(s.security_band * latency_buckets_ + s.latency_band);
  return state * actions_.size() + action;
}

double QTable::max_value(StateId s) const { return value(s, greedy(s)); }

std::size_t QTable::greedy(StateId s) const {
  const auto base = index(s, 0);
  std::size_t best = 0;
  for (std::size_t a = 1; a < actions_.size(); ++a) {
    if (values_[base + a] > values_[base + best]) best = a;
  }
  return best;
}

void QTable::init_random(std::uint64_t seed, double max_value) {
  auto rng = make_rng(seed, {tag(Stream::kQInit)});
  for (auto& v : values_) v = uniform01(rng) * max_value;
}

std::size_t QTable::action_index(const ParameterPlan& plan) const {
  auto it = std::lower_bound(actions_.begin(), actions_.end(), plan);
  if (it == actions_.end() || *it != plan) {
    throw InputError("plan " + plan.to_string() + " is not in the action grid");
  }
  return static_cast<std::size_t>(it - actions_.begin());
}

nlohmann::json QTable::to_json() const {
  nlohmann::json j;
  j["params"] = {{"gamma", params_.gamma}, {"mu", params_.mu}, {"epsilon", params_.epsilon}};
  j["latency_buckets"] = latency_buckets_;
  j["actions"] = nlohmann::json::array();
  for (const auto& a : actions_) j["actions"].push_back(a.to_string());
  nlohmann::json values = nlohmann::json::object();
  for (int s = 0; s < 3; ++s) {
    for (int l = 0; l < latency_buckets_; ++l) {
      for (std::size_t a = 0; a < actions_.size(); ++a) {
        const std::string key = StateId{s, l}.to_string() + "->(" +
                                std::to_string(actions_[a].log_n) + "," +
                                std::to_string(actions_[a].q_bits) + ")";
        values[key] = value({s, l}, a);
      }
    }
  }
  j["values"] = std::move(values);
  return j;
}

QTable QTable::from_json(const nlohmann::json& j) {
  try {
    QLearningParams p;
    p.gamma = j.at("params").at("gamma").get<double>();
    p.mu = j.at("params").at("mu").get<double>();
    p.epsilon = j.at("params").at("epsilon").get<double>();
    std::vector<ParameterPlan> actions;
    for (const auto& a : j.at("actions")) actions.push_back(ParameterPlan::parse(a.get<std::string>()));
    QTable q(std::move(actions), j.at("latency_buckets").get<int>(), p);
    for (const auto& [key, v] : j.at("values").items()) {
      int s = 0, l = 0, n = 0, bits = 0;
      if (std::sscanf(key.c_str(), "(%d,%d)->(%d,%d)", &s, &l, &n, &bits) != 4) {
        throw InputError("malformed Q-table key '" + key + "'");
      }
      q.set({s, l}, q.action_index({n, bits}), v.get<double>());
    }
    return q;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed Q-table JSON: ") + e.what());
  }
}

StateId discretize_state(std::span<const ClientId> members, const Population& pop,
                         std::span<const double> reference_latency,
                         std::span<const double> latency_edges) {
  for (std::size_t i = 1; i < latency_edges.size(); ++i) {
    if (!(latency_edges[i] > latency_edges[i - 1])) {
      throw InputError("latency bucket edges must be strictly increasing");
    }
  }
  StateId s;
  if (members.empty()) return s;
  int max_req = 0;
  double mean = 0;
  for (ClientId id : members) {
    max_req = std::max(max_req, pop[id].security_req);
    mean += reference_latency[id];
  }
  mean /= static_cast<double>(members.size());
  s.security_band = std::max(0, security_level_index(max_req));
  s.latency_band = static_cast<int>(
      std::upper_bound(latency_edges.begin(), latency_edges.end(), mean) - latency_edges.begin());
  return s;
}

std::size_t select_action(const QTable& q, StateId s, Rng& rng) {
  const double u = uniform01(rng);
  const auto random_action = static_cast<std::size_t>(uniform_index(rng, q.n_actions()));
  return u < q.params().epsilon ? random_action : q.greedy(s);
}

double tier_reward(const TierRoundObservation& obs, const RewardConfig& cfg) {
  if (obs.participants.empty()) throw InputError("tier observation without participants");
  if (!(obs.round_time > 0)) throw InputError("tier round time must be positive");
  const double norm = static_cast<double>(obs.participants.size()) * obs.round_time;
  double r = 0;
  for (const auto& p : obs.participants) {
    r += p.delta_util / norm;
    if (obs.plan_security < p.security_req) r -= cfg.alpha;
  }
  return r;
}

double compute_reward(std::span<const TierRoundObservation> obs, const RewardConfig& cfg) {
  if (obs.empty()) throw InputError("reward needs at least one tier observation");
  double r = 0;
  for (const auto& o : obs) r += tier_reward(o, cfg);
  return r;
}

double update_q(QTable& q, StateId s, std::size_t action, double reward, StateId s_next) {
  const double current = q.value(s, action);
  const double target = reward + q.params().mu * q.max_value(s_next);
  const double updated = current + q.params().gamma * (target - current);
  q.set(s, action, updated);
  return updated;
}

HerlAgent::HerlAgent(QTable table, RewardConfig reward, std::vector<double> latency_edges,
                     std::uint64_t seed)
    : table_(std::move(table)),
      reward_(reward),
      edges_(std::move(latency_edges)),
      rng_(make_rng(seed, {tag(Stream::kAgent)})) {
  if (reward_.alpha < 0) throw ConfigError("security penalty alpha must be non-negative");
  if (static_cast<int>(edges_.size()) + 1 != table_.latency_buckets()) {
    throw ConfigError("latency edges do not match the Q-table's bucket count");
  }
}

std::vector<HerlAgent::Selection> HerlAgent::param_selection(
    const Tiering& tiers, const Population& pop, std::span<const double> reference_latency) {
  std::vector<Selection> out;
  out.reserve(tiers.size());
  for (std::size_t k = 0; k < tiers.size(); ++k) {
    Selection sel;
    sel.tier = static_cast<int>(k);
    sel.state = discretize_state(tiers.tiers[k], pop, reference_latency, edges_);
    sel.action = select_action(table_, sel.state, rng_);
    sel.plan = table_.actions()[sel.action];
    out.push_back(sel);
  }
  return out;
}

std::vector<double> HerlAgent::learn(std::span<const Selection> selections,
                                     std::span<const TierRoundObservation> obs,
                                     std::span<const StateId> next_states) {
  std::vector<double> rewards;
  rewards.reserve(obs.size());
  for (const auto& o : obs) {
    const auto& sel = selections[static_cast<std::size_t>(o.tier)];
    const double r = tier_reward(o, reward_);
    update_q(table_, sel.state, sel.action, r, next_states[static_cast<std::size_t>(o.tier)]);
    rewards.push_back(r);
  }
  return rewards;
}

}  // namespace hefl
