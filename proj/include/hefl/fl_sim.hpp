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

#ifndef HEFL_FL_SIM_HPP_
#define HEFL_FL_SIM_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hefl/client_profile.hpp"
#include "hefl/he_plan.hpp"
#include "hefl/rl_agent.hpp"
#include "hefl/rng.hpp"
#include "hefl/tiering.hpp"
#include "json.hpp"

namespace hefl {

struct GlobalModel {
  double accuracy = 0.0;
  std::vector<double> params;  // only populated by vector-mode trainers
  std::uint64_t round = 0;
};

// Saturating-exponential stand-in for local training. A plan only touches
// utility through its precision ceiling a_max * (1 - precision_penalty).
struct TrainerModel {
  double a_max = 0.8;
  double rate = 0.02;
  double noise_sd = 0.0;
  double heterogeneity_sd = 0.0;
  double initial_accuracy = 0.1;

  void validate() const;
};

// Exactly round(rate * |pop|) distinct ids (at least one), uniform without
// replacement, sorted. Deterministic in (seed, round).
std::vector<ClientId> sample_participants(const Population& pop, double rate, std::uint64_t round,
                                          std::uint64_t seed);

double effective_ceiling(const ParameterPlan& plan, const TrainerModel& tm, const CostModel& cost);

// Accuracy-proxy gain of one client for one round. `round_noise` is the
// round-wide shift shared by every participant; the per-client draw comes
// from `rng` (always exactly one normal draw). The result keeps the client's
// projected accuracy g.accuracy + gain inside [0, ceiling].
double simulate_local_training(const ClientProfile& client, const GlobalModel& g,
                               const TrainerModel& tm, const ParameterPlan& plan,
                               const CostModel& cost, Rng& rng, double round_noise = 0.0);

// Straggler time L_k: the slowest participating member. Throws InputError
// when `participants` is empty.
double tier_round_time(std::span<const ClientId> participants, const Population& pop,
                       const ParameterPlan& plan, const CostModel& cost, std::uint64_t n_params);

struct WeightedValue {
  double value = 0.0;
  std::uint64_t data_size = 0;
};
struct WeightedVector {
  std::vector<double> value;
  std::uint64_t data_size = 0;
};

// sum_i |D_i| / |D| * w_i. Throws InputError on an empty list, zero total
// weight or (vector form) mismatched lengths.
double fedavg(std::span<const WeightedValue> updates);
std::vector<double> fedavg(std::span<const WeightedVector> updates);

enum class Strategy { kBaseline, kHeuristic, kAdaptive, kHerl };
std::string to_string(Strategy s);
Strategy parse_strategy(const std::string& name);

enum class TieringMethod { kHierarchical, kRoundtime, kRandom, kUtility };
std::string to_string(TieringMethod m);
TieringMethod parse_tiering_method(const std::string& name);

enum class DataPartition { kDirichlet, kEqual };

// Fixed plans used by the non-learning strategies.
struct StrategyPlans {
  ParameterPlan baseline{14, 200};
  ParameterPlan heuristic{13, 100};
  ParameterPlan adaptive_low{13, 100};
  ParameterPlan adaptive_high{14, 200};
};

// Everything one simulated run needs.
struct ExperimentConfig {
  // Population.
  std::filesystem::path trace;
  std::size_t n_clients = 0;
  std::array<double, 3> security_weights{1.0, 1.0, 1.0};
  DataPartition partition = DataPartition::kDirichlet;
  double dirichlet_alpha = 0.5;
  std::uint64_t total_samples = 50000;
  std::uint64_t samples_per_client = 500;

  // HE.
  SecurityTable table;
  CostModel cost;
  std::vector<ParameterPlan> grid;
  StrategyPlans plans;
  std::optional<ParameterPlan> reference_plan;  // default: middle of the grid
  std::uint64_t n_params = 1;

  // Tiering.
  TieringMethod tiering = TieringMethod::kHierarchical;
  std::vector<CriterionKind> criteria{CriterionKind::kSecurity, CriterionKind::kLatency};
  int k = 9;
  int retier_every = 0;  // 0 keeps the round-0 tiering

  TrainerModel trainer;

  // Agent.
  QLearningParams q;
  RewardConfig reward;
  double q_init_max = 0.01;
  int latency_buckets = 4;
  std::vector<double> latency_edges;  // empty: population quantiles

  // Run.
  std::uint64_t rounds = 100;
  double participation_rate = 0.1;
  double convergence_fraction = 0.95;
  std::optional<double> stop_accuracy;
  Strategy strategy = Strategy::kBaseline;
  std::uint64_t seed = 1;

  // Throws ConfigError naming the first violated constraint.
  void validate() const;
};

struct TierRoundStats {
  int tier = 0;
  ParameterPlan plan;
  int plan_security = 0;
  int participants = 0;
  double round_time = 0.0;  // 0 when the tier had no participants
  int security_loss = 0;
  double mean_delta_util = 0.0;
  std::optional<double> reward;
};

struct RoundReport {
  std::uint64_t round = 0;
  std::vector<TierRoundStats> tiers;
  int participants = 0;
  int security_loss = 0;
  double round_time = 0.0;  // max over tiers
  double sim_time = 0.0;    // cumulative
  double global_accuracy = 0.0;
  std::optional<double> reward;  // sum over tiers, learning strategies only
};

Population build_population(const ExperimentConfig& cfg);
ParameterPlan reference_plan(const ExperimentConfig& cfg);
// n_buckets - 1 quantile edges of the population's reference latencies.
std::vector<double> quantile_edges(std::span<const double> values, int n_buckets);

// Drives one run round by round. Single-threaded; owns all of its state.
class Engine {
 public:
  explicit Engine(ExperimentConfig cfg);

  RoundReport run_round();

  const ExperimentConfig& config() const { return cfg_; }
  const Population& population() const { return pop_; }
  const Tiering& tiering() const { return tiering_; }
  const GlobalModel& model() const { return model_; }
  const HerlAgent* agent() const { return agent_ ? &*agent_ : nullptr; }
  double sim_time() const { return sim_time_; }
  const std::vector<double>& reference_latency() const { return reference_latency_; }

 private:
  void build_tiering();
  std::vector<ParameterPlan> fixed_plans() const;

  ExperimentConfig cfg_;
  Population pop_;
  ParameterPlan reference_plan_;
  std::vector<double> reference_latency_;
  std::vector<double> latency_sum_;
  std::vector<double> utility_sum_;
  std::vector<std::uint32_t> observations_;
  Tiering tiering_;
  std::vector<int> tier_of_;
  std::optional<HerlAgent> agent_;
  GlobalModel model_;
  double sim_time_ = 0.0;
};

struct ExperimentResult {
  Strategy strategy = Strategy::kBaseline;
  std::uint64_t seed = 0;
  std::vector<RoundReport> rounds;
  double final_accuracy = 0.0;
  std::optional<double> convergence_time;
  std::optional<std::uint64_t> convergence_round;
  long long total_security_loss = 0;
  long long participant_rounds = 0;
  // Per tier: plan -> rounds selected.
  std::vector<std::map<ParameterPlan, int>> plan_histograms;
  std::optional<QTable> qtable;
  Tiering tiering;

  // Simulated time at which global accuracy first reaches `target`.
  std::optional<double> time_to_reach(double target) const;
  // Security loss summed over the last `n` rounds.
  long long security_loss_last(std::size_t n) const;
  long long participants_last(std::size_t n) const;
};

// Throws ConfigError before simulating anything when cfg is invalid.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// One row per round: round, sim_time_s, round_time_s, global_acc,
// participants, security_loss, reward, then per tier k: tier<k>_plan,
// tier<k>_L, tier<k>_n, tier<k>_security_loss, tier<k>_reward.
void write_run_csv(const ExperimentResult& r, std::ostream& out);
nlohmann::json summary_json(const ExperimentResult& r);

// Fixed-format number rendering shared by every emitted file.
std::string format_number(double v);

}  // namespace hefl

#endif  // HEFL_FL_SIM_HPP_
