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

#include "hefl/fl_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>

#include "hefl/error.hpp"

namespace hefl {

void TrainerModel::validate() const {
  if (!(a_max > 0 && a_max <= 1)) throw ConfigError("trainer a_max must lie in (0, 1]");
  if (!(rate > 0)) throw ConfigError("trainer rate must be positive");
  if (!(noise_sd >= 0) || !(heterogeneity_sd >= 0)) {
    throw ConfigError("trainer noise levels must be non-negative");
  }
  if (!(initial_accuracy >= 0 && initial_accuracy <= 1)) {
    throw ConfigError("trainer initial_accuracy must lie in [0, 1]");
  }
}

std::vector<ClientId> sample_participants(const Population& pop, double rate, std::uint64_t round,
                                          std::uint64_t seed) {
  if (!(rate > 0 && rate <= 1)) throw InputError("participation rate must lie in (0, 1]");
  const std::size_t n = pop.size();
  const auto count = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(rate * static_cast<double>(n))), 1, n);
  std::vector<ClientId> ids(n);
  std::iota(ids.begin(), ids.end(), ClientId{0});
  auto rng = make_rng(seed, {tag(Stream::kParticipants), round});
  for (std::size_t i = 0; i < count; ++i) std::swap(ids[i], ids[i + uniform_index(rng, n - i)]);
  ids.resize(count);
  std::sort(ids.begin(), ids.end());
  return ids;
}

double effective_ceiling(const ParameterPlan& plan, const TrainerModel& tm, const CostModel& cost) {
  return tm.a_max * (1.0 - precision_penalty(plan, cost));
}

namespace {

double standard_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

}  // namespace

double simulate_local_training(const ClientProfile& /*client*/, const GlobalModel& g,
                               const TrainerModel& tm, const ParameterPlan& plan,
                               const CostModel& cost, Rng& rng, double round_noise) {
  const double ceiling = effective_ceiling(plan, tm, cost);
  const double expected = tm.rate * std::max(0.0, ceiling - g.accuracy);
  const double gain = expected + tm.heterogeneity_sd * standard_normal(rng) + round_noise;
  const double projected = std::clamp(g.accuracy + gain, 0.0, ceiling);
  return projected - g.accuracy;
}

double tier_round_time(std::span<const ClientId> participants, const Population& pop,
                       const ParameterPlan& plan, const CostModel& cost, std::uint64_t n_params) {
  if (participants.empty()) throw InputError("tier round time needs at least one participant");
  double worst = 0;
  for (ClientId id : participants) {
    worst = std::max(worst, estimate_round_latency(pop[id], plan, cost, n_params));
  }
  return worst;
}

double fedavg(std::span<const WeightedValue> updates) {
  if (updates.empty()) throw InputError("fedavg needs at least one update");
  double total = 0;
  for (const auto& u : updates) total += static_cast<double>(u.data_size);
  if (!(total > 0)) throw InputError("fedavg needs a positive total data size");
  double out = 0;
  for (const auto& u : updates) out += static_cast<double>(u.data_size) / total * u.value;
  return out;
}

std::vector<double> fedavg(std::span<const WeightedVector> updates) {
  if (updates.empty()) throw InputError("fedavg needs at least one update");
  const auto dim = updates.front().value.size();
  double total = 0;
  for (const auto& u : updates) {
    if (u.value.size() != dim) throw InputError("fedavg updates differ in length");
    total += static_cast<double>(u.data_size);
  }
  if (!(total > 0)) throw InputError("fedavg needs a positive total data size");
  std::vector<double> out(dim, 0.0);
  for (const auto& u : updates) {
    const double w = static_cast<double>(u.data_size) / total;
    for (std::size_t i = 0; i < dim; ++i) out[i] += w * u.value[i];
  }
  return out;
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::kBaseline: return "baseline";
    case Strategy::kHeuristic: return "heuristic";
    case Strategy::kAdaptive: return "adaptive";
    case Strategy::kHerl: return "herl";
  }
  return "?";
}

Strategy parse_strategy(const std::string& name) {
  if (name == "baseline") return Strategy::kBaseline;
  if (name == "heuristic") return Strategy::kHeuristic;
  if (name == "adaptive") return Strategy::kAdaptive;
  if (name == "herl") return Strategy::kHerl;
  throw InputError("unknown strategy '" + name + "'");
}

std::string to_string(TieringMethod m) {
  switch (m) {
    case TieringMethod::kHierarchical: return "hierarchical";
    case TieringMethod::kRoundtime: return "roundtime";
    case TieringMethod::kRandom: return "random";
    case TieringMethod::kUtility: return "utility";
  }
  return "?";
}

TieringMethod parse_tiering_method(const std::string& name) {
  if (name == "hierarchical") return TieringMethod::kHierarchical;
  if (name == "roundtime") return TieringMethod::kRoundtime;
  if (name == "random") return TieringMethod::kRandom;
  if (name == "utility") return TieringMethod::kUtility;
  throw InputError("unknown tiering method '" + name + "'");
}

void ExperimentConfig::validate() const {
  if (n_clients == 0) throw ConfigError("n_clients must be at least 1");
  if (table.empty()) throw ConfigError("security table is empty");
  cost.validate();
  trainer.validate();
  q.validate();
  if (reward.alpha < 0) throw ConfigError("alpha must be non-negative");
  if (grid.empty()) throw ConfigError("plan grid is empty");
  for (const auto& p : grid) {
    if (!table.covers(p.log_n) || !validate_plan(p, table)) {
      throw ConfigError("grid plan " + p.to_string() + " is not admissible");
    }
  }
  for (const auto& p : {plans.baseline, plans.heuristic, plans.adaptive_low, plans.adaptive_high}) {
    if (!table.covers(p.log_n) || !validate_plan(p, table)) {
      throw ConfigError("strategy plan " + p.to_string() + " is not admissible");
    }
  }
  if (reference_plan && (!table.covers(reference_plan->log_n) || !validate_plan(*reference_plan, table))) {
    throw ConfigError("reference plan " + reference_plan->to_string() + " is not admissible");
  }
  if (n_params == 0) throw ConfigError("n_params must be positive");
  if (!(participation_rate > 0 && participation_rate <= 1)) {
    throw ConfigError("participation rate must lie in (0, 1]");
  }
  if (!(convergence_fraction > 0 && convergence_fraction <= 1)) {
    throw ConfigError("convergence fraction must lie in (0, 1]");
  }
  if (k < 1) throw ConfigError("K must be at least 1");
  if (tiering == TieringMethod::kRandom && static_cast<std::size_t>(k) > n_clients) {
    throw ConfigError("random tiering needs K <= n_clients");
  }
  if (tiering == TieringMethod::kHierarchical) {
    if (criteria.empty()) throw ConfigError("hierarchical tiering needs criteria");
    if (k > 1) {
      const int beta = static_cast<int>(criteria.size());
      const int m = static_cast<int>(std::lround(std::pow(static_cast<double>(k), 1.0 / beta)));
      long long check = 1;
      for (int i = 0; i < beta; ++i) check *= m;
      if (m < 2 || check != k) {
        std::string msg = "K=" + std::to_string(k) + " is not m^" + std::to_string(beta) +
                          " for hierarchical tiering; try K in {";
        const auto valid = valid_tier_counts(beta, k);
        for (std::size_t i = 0; i < valid.size(); ++i) msg += (i ? "," : "") + std::to_string(valid[i]);
        throw ConfigError(msg + "}");
      }
    }
  }
  if (retier_every < 0) throw ConfigError("retier_every must be non-negative");
  if (latency_buckets < 1) throw ConfigError("latency_buckets must be at least 1");
  if (!latency_edges.empty()) {
    if (static_cast<int>(latency_edges.size()) + 1 != latency_buckets) {
      throw ConfigError("latency_edges must list latency_buckets - 1 values");
    }
    for (std::size_t i = 1; i < latency_edges.size(); ++i) {
      if (!(latency_edges[i] > latency_edges[i - 1])) {
        throw ConfigError("latency_edges must be strictly increasing");
      }
    }
  }
  if (!(q_init_max >= 0)) throw ConfigError("q_init_max must be non-negative");
  for (double w : security_weights) {
    if (!(w >= 0)) throw ConfigError("security weights must be non-negative");
  }
  if (!(security_weights[0] + security_weights[1] + security_weights[2] > 0)) {
    throw ConfigError("security weights must not all be zero");
  }
  if (partition == DataPartition::kDirichlet && !(dirichlet_alpha > 0)) {
    throw ConfigError("dirichlet_alpha must be positive");
  }
}

Population build_population(const ExperimentConfig& cfg) {
  Population pop = load_traces(cfg.trace, cfg.n_clients, cfg.seed);
  pop = assign_security(std::move(pop), cfg.security_weights, cfg.seed);
  pop = cfg.partition == DataPartition::kDirichlet
            ? assign_dirichlet_sizes(std::move(pop), cfg.total_samples, cfg.dirichlet_alpha, cfg.seed)
            : assign_equal_sizes(std::move(pop), cfg.samples_per_client);
  pop.validate();
  return pop;
}

ParameterPlan reference_plan(const ExperimentConfig& cfg) {
  if (cfg.reference_plan) return *cfg.reference_plan;
  std::vector<int> ns, qs;
  for (const auto& p : cfg.grid) {
    ns.push_back(p.log_n);
    qs.push_back(p.q_bits);
  }
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  std::sort(qs.begin(), qs.end());
  qs.erase(std::unique(qs.begin(), qs.end()), qs.end());
  ParameterPlan mid{ns[ns.size() / 2], qs[qs.size() / 2]};
  if (validate_plan(mid, cfg.table)) return mid;
  return cfg.grid[cfg.grid.size() / 2];
}

std::vector<double> quantile_edges(std::span<const double> values, int n_buckets) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> edges;
  if (sorted.empty()) return edges;
  for (int b = 1; b < n_buckets; ++b) {
    const double pos = static_cast<double>(b) / n_buckets * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double v = sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
    if (edges.empty() || v > edges.back()) {
      edges.push_back(v);
    } else {
      edges.push_back(std::nextafter(edges.back(), INFINITY));
    }
  }
  return edges;
}

Engine::Engine(ExperimentConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  pop_ = build_population(cfg_);
  reference_plan_ = reference_plan(cfg_);
  reference_latency_.resize(pop_.size());
  for (const auto& c : pop_.clients) {
    reference_latency_[c.id] = estimate_round_latency(c, reference_plan_, cfg_.cost, cfg_.n_params);
  }
  latency_sum_.assign(pop_.size(), 0.0);
  utility_sum_.assign(pop_.size(), 0.0);
  observations_.assign(pop_.size(), 0);
  build_tiering();

  if (cfg_.strategy == Strategy::kHerl) {
    QTable table(cfg_.grid, cfg_.latency_buckets, cfg_.q);
    table.init_random(cfg_.seed, cfg_.q_init_max);
    auto edges = cfg_.latency_edges.empty()
                     ? quantile_edges(reference_latency_, cfg_.latency_buckets)
                     : cfg_.latency_edges;
    agent_.emplace(std::move(table), cfg_.reward, std::move(edges), cfg_.seed);
  }
  model_.accuracy = cfg_.trainer.initial_accuracy;
}

void Engine::build_tiering() {
  // Keys are snapshots so the tiering stays valid independent of the engine.
  std::vector<double> latency_key(pop_.size()), utility_key(pop_.size());
  for (std::size_t i = 0; i < pop_.size(); ++i) {
    latency_key[i] = observations_[i] ? latency_sum_[i] / observations_[i] : reference_latency_[i];
    utility_key[i] = observations_[i] ? utility_sum_[i] / observations_[i] : 0.0;
  }
  auto latency_fn = [keys = latency_key, plan = reference_plan_, cost = cfg_.cost,
                     n = cfg_.n_params](const ClientProfile& c) {
    return c.id < keys.size() ? keys[c.id] : estimate_round_latency(c, plan, cost, n);
  };
  auto utility_fn = [keys = utility_key](const ClientProfile& c) {
    return c.id < keys.size() ? keys[c.id] : 0.0;
  };
  auto make = [&](CriterionKind kind) {
    switch (kind) {
      case CriterionKind::kSecurity: return security_criterion();
      case CriterionKind::kLatency: return latency_criterion(latency_fn);
      case CriterionKind::kUtility: return utility_criterion(utility_fn);
    }
    return security_criterion();
  };

  switch (cfg_.tiering) {
    case TieringMethod::kHierarchical: {
      std::vector<Criterion> criteria;
      for (auto kind : cfg_.criteria) criteria.push_back(make(kind));
      tiering_ = hierarchical_tiering(pop_, criteria, cfg_.k);
      break;
    }
    case TieringMethod::kRoundtime:
      tiering_ = roundtime_tiering(pop_, cfg_.k, latency_key);
      break;
    case TieringMethod::kUtility:
      tiering_ = utility_tiering(pop_, cfg_.k, utility_key);
      break;
    case TieringMethod::kRandom:
      tiering_ = random_tiering(pop_, cfg_.k, cfg_.seed,
                                {make(CriterionKind::kSecurity), make(CriterionKind::kLatency)});
      break;
  }
  tier_of_.assign(pop_.size(), -1);
  for (std::size_t k = 0; k < tiering_.size(); ++k) {
    for (ClientId id : tiering_.tiers[k]) tier_of_[id] = static_cast<int>(k);
  }
}

std::vector<ParameterPlan> Engine::fixed_plans() const {
  const auto k = tiering_.size();
  switch (cfg_.strategy) {
    case Strategy::kBaseline: return std::vector<ParameterPlan>(k, cfg_.plans.baseline);
    case Strategy::kHeuristic: return std::vector<ParameterPlan>(k, cfg_.plans.heuristic);
    case Strategy::kAdaptive: {
      // Slowest tiers (by mean reference latency) covering half the clients
      // get the low plan; everyone else the high plan.
      std::vector<std::pair<double, std::size_t>> order;
      for (std::size_t t = 0; t < k; ++t) {
        if (tiering_.tiers[t].empty()) continue;
        double mean = 0;
        for (ClientId id : tiering_.tiers[t]) mean += reference_latency_[id];
        order.emplace_back(mean / static_cast<double>(tiering_.tiers[t].size()), t);
      }
      std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
      });
      std::vector<ParameterPlan> plans(k, cfg_.plans.adaptive_high);
      std::size_t covered = 0;
      for (const auto& [mean, t] : order) {
        if (2 * covered >= pop_.size()) break;
        plans[t] = cfg_.plans.adaptive_low;
        covered += tiering_.tiers[t].size();
      }
      return plans;
    }
    case Strategy::kHerl: break;
  }
  throw InputError("learning strategy has no fixed plans");
}

RoundReport Engine::run_round() {
  const std::uint64_t r = ++model_.round;
  if (cfg_.retier_every > 0 && r > 1 && (r - 1) % static_cast<std::uint64_t>(cfg_.retier_every) == 0) {
    build_tiering();
  }

  const auto participants = sample_participants(pop_, cfg_.participation_rate, r, cfg_.seed);
  for (ClientId id : participants) {
    if (tier_of_[id] < 0) {
      const int k = assign_new_client(tiering_, pop_[id]);
      tiering_.tiers[static_cast<std::size_t>(k)].push_back(id);
      tier_of_[id] = k;
    }
  }

  const std::size_t k_count = tiering_.size();
  std::vector<ParameterPlan> plans;
  std::vector<HerlAgent::Selection> selections;
  if (agent_) {
    selections = agent_->param_selection(tiering_, pop_, reference_latency_);
    for (const auto& s : selections) plans.push_back(s.plan);
  } else {
    plans = fixed_plans();
  }

  RoundReport report;
  report.round = r;
  report.participants = static_cast<int>(participants.size());
  report.tiers.resize(k_count);
  std::vector<std::vector<ClientId>> by_tier(k_count);
  std::vector<TierRoundObservation> obs(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    auto& t = report.tiers[k];
    t.tier = static_cast<int>(k);
    t.plan = plans[k];
    t.plan_security = security_bits(plans[k], cfg_.table);
    obs[k].tier = static_cast<int>(k);
    obs[k].plan_security = t.plan_security;
  }

  auto rng = make_rng(cfg_.seed, {tag(Stream::kTraining), r});
  const double round_noise = cfg_.trainer.noise_sd * standard_normal(rng);
  std::vector<WeightedValue> updates;
  updates.reserve(participants.size());
  for (ClientId id : participants) {
    const auto k = static_cast<std::size_t>(tier_of_[id]);
    const auto& client = pop_[id];
    const double gain = simulate_local_training(client, model_, cfg_.trainer, plans[k], cfg_.cost,
                                                rng, round_noise);
    updates.push_back({model_.accuracy + gain, client.data_size});
    by_tier[k].push_back(id);
    obs[k].participants.push_back({id, gain, client.security_req});
    report.tiers[k].mean_delta_util += gain;

    latency_sum_[id] += estimate_round_latency(client, plans[k], cfg_.cost, cfg_.n_params);
    utility_sum_[id] += gain;
    ++observations_[id];
  }

  std::vector<TierRoundObservation> active;
  for (std::size_t k = 0; k < k_count; ++k) {
    auto& t = report.tiers[k];
    if (by_tier[k].empty()) continue;
    t.participants = static_cast<int>(by_tier[k].size());
    t.mean_delta_util /= t.participants;
    t.round_time = tier_round_time(by_tier[k], pop_, plans[k], cfg_.cost, cfg_.n_params);
    for (ClientId id : by_tier[k]) {
      if (t.plan_security < pop_[id].security_req) ++t.security_loss;
    }
    obs[k].round_time = t.round_time;
    report.security_loss += t.security_loss;
    report.round_time = std::max(report.round_time, t.round_time);
    active.push_back(std::move(obs[k]));
  }

  model_.accuracy = std::clamp(fedavg(updates), 0.0, 1.0);
  sim_time_ += report.round_time;
  report.sim_time = sim_time_;
  report.global_accuracy = model_.accuracy;

  if (agent_) {
    std::vector<StateId> next(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
      next[k] = discretize_state(tiering_.tiers[k], pop_, reference_latency_,
                                 agent_->latency_edges());
    }
    const auto rewards = agent_->learn(selections, active, next);
    double total = 0;
    for (std::size_t i = 0; i < active.size(); ++i) {
      report.tiers[static_cast<std::size_t>(active[i].tier)].reward = rewards[i];
      total += rewards[i];
    }
    report.reward = total;
  }
  return report;
}

std::optional<double> ExperimentResult::time_to_reach(double target) const {
  for (const auto& r : rounds) {
    if (r.global_accuracy >= target) return r.sim_time;
  }
  return std::nullopt;
}

long long ExperimentResult::security_loss_last(std::size_t n) const {
  long long total = 0;
  const auto start = rounds.size() > n ? rounds.size() - n : 0;
  for (auto i = start; i < rounds.size(); ++i) total += rounds[i].security_loss;
  return total;
}

long long ExperimentResult::participants_last(std::size_t n) const {
  long long total = 0;
  const auto start = rounds.size() > n ? rounds.size() - n : 0;
  for (auto i = start; i < rounds.size(); ++i) total += rounds[i].participants;
  return total;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  Engine engine(cfg);
  ExperimentResult out;
  out.strategy = cfg.strategy;
  out.seed = cfg.seed;
  out.plan_histograms.resize(engine.tiering().size());
  out.final_accuracy = engine.model().accuracy;
  for (std::uint64_t i = 0; i < cfg.rounds; ++i) {
    auto report = engine.run_round();
    for (const auto& t : report.tiers) {
      if (static_cast<std::size_t>(t.tier) >= out.plan_histograms.size()) {
        out.plan_histograms.resize(static_cast<std::size_t>(t.tier) + 1);
      }
      ++out.plan_histograms[static_cast<std::size_t>(t.tier)][t.plan];
    }
    out.total_security_loss += report.security_loss;
    out.participant_rounds += report.participants;
    out.final_accuracy = report.global_accuracy;
    out.rounds.push_back(std::move(report));
    if (cfg.stop_accuracy && out.final_accuracy >= *cfg.stop_accuracy) break;
  }
  if (!out.rounds.empty()) {
    const double target = cfg.convergence_fraction * out.final_accuracy;
    for (const auto& r : out.rounds) {
      if (r.global_accuracy >= target) {
        out.convergence_time = r.sim_time;
        out.convergence_round = r.round;
        break;
      }
    }
  }
  if (const auto* agent = engine.agent()) out.qtable = agent->table();
  out.tiering = engine.tiering();
  return out;
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void write_run_csv(const ExperimentResult& r, std::ostream& out) {
  const std::size_t k = r.plan_histograms.size();
  out << "round,sim_time_s,round_time_s,global_acc,participants,security_loss,reward";
  for (std::size_t t = 0; t < k; ++t) {
    out << ",tier" << t << "_plan,tier" << t << "_L,tier" << t << "_n,tier" << t
        << "_security_loss,tier" << t << "_reward";
  }
  out << '\n';
  for (const auto& rr : r.rounds) {
    out << rr.round << ',' << format_number(rr.sim_time) << ',' << format_number(rr.round_time)
        << ',' << format_number(rr.global_accuracy) << ',' << rr.participants << ','
        << rr.security_loss << ',' << (rr.reward ? format_number(*rr.reward) : "");
    for (const auto& t : rr.tiers) {
      out << ',' << t.plan.to_string() << ',' << format_number(t.round_time) << ','
          << t.participants << ',' << t.security_loss << ','
          << (t.reward ? format_number(*t.reward) : "");
    }
    out << '\n';
  }
}

nlohmann::json summary_json(const ExperimentResult& r) {
  nlohmann::json j;
  j["strategy"] = to_string(r.strategy);
  j["seed"] = r.seed;
  j["rounds"] = r.rounds.size();
  j["final_accuracy"] = r.final_accuracy;
  j["convergence_time_s"] = r.convergence_time ? nlohmann::json(*r.convergence_time) : nlohmann::json();
  j["convergence_round"] = r.convergence_round ? nlohmann::json(*r.convergence_round) : nlohmann::json();
  j["total_sim_time_s"] = r.rounds.empty() ? 0.0 : r.rounds.back().sim_time;
  j["total_security_loss"] = r.total_security_loss;
  j["participant_rounds"] = r.participant_rounds;
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& h : r.plan_histograms) {
    nlohmann::json tier = nlohmann::json::object();
    for (const auto& [plan, count] : h) tier[plan.to_string()] = count;
    hist.push_back(std::move(tier));
  }
  j["plan_histograms"] = std::move(hist);
  j["tiering"] = to_json(r.tiering);
  return j;
}

}  // namespace hefl
