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

// Acceptance suite: one PASS/FAIL line per criterion. Exit status is non-zero
// when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hefl/harness.hpp"
#include "hefl/rl_agent.hpp"
#include "hefl/rng.hpp"
#include "hefl/tiering.hpp"
#include "partition_oracle.hpp"

using namespace hefl;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

const fs::path kRoot = HEFL_SOURCE_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const Outcome& o, double seconds) {
  std::printf("%s %d %s: %s [%.2fs]\n", o.pass ? "PASS" : "FAIL", id, name.c_str(),
              o.detail.c_str(), seconds);
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

void run(int id, const std::string& name, const std::function<Outcome()>& fn) {
  const auto start = Clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  report(id, name, o, std::chrono::duration<double>(Clock::now() - start).count());
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// Every plan any acceptance run used, checked by criterion 6.
struct PlanLog {
  std::map<ParameterPlan, long long> uses;
  SecurityTable table;

  void add(const ExperimentResult& r) {
    for (const auto& rr : r.rounds) {
      for (const auto& t : rr.tiers) ++uses[t.plan];
    }
  }
} plan_log;

std::optional<double> first_time(const ExperimentResult& r, double target) {
  return r.time_to_reach(target);
}

const ExperimentResult& cell(const ComparisonReport& rep, Strategy s, std::uint64_t seed) {
  for (const auto& c : rep.cells) {
    if (c.strategy == s && c.seed == seed) {
      if (!c.result) throw std::runtime_error(to_string(s) + " seed " + std::to_string(seed) + ": " + c.error);
      return *c.result;
    }
  }
  throw std::runtime_error("missing cell");
}

double median_of(std::vector<double> v) { return median(std::move(v)); }

// 1. Motivation ordering.
Outcome motivation() {
  const auto start = Clock::now();
  const auto cfg = parse_config(kRoot / "scenarios/motivation_20clients.conf");
  plan_log.table = cfg.base.table;
  const auto rep = run_comparison(cfg);
  std::vector<double> half_b, half_h, half_a, near_b, near_a, fin_b, fin_h, fin_a;
  for (auto seed : cfg.seeds) {
    const auto& b = cell(rep, Strategy::kBaseline, seed);
    const auto& h = cell(rep, Strategy::kHeuristic, seed);
    const auto& a = cell(rep, Strategy::kAdaptive, seed);
    for (const auto* r : {&b, &h, &a}) plan_log.add(*r);
    const double bf = b.final_accuracy;
    const double never = 1e300;
    half_b.push_back(first_time(b, 0.5 * bf).value_or(never));
    half_h.push_back(first_time(h, 0.5 * bf).value_or(never));
    half_a.push_back(first_time(a, 0.5 * bf).value_or(never));
    near_b.push_back(first_time(b, bf - 0.01).value_or(never));
    near_a.push_back(first_time(a, bf - 0.01).value_or(never));
    fin_b.push_back(b.final_accuracy);
    fin_h.push_back(h.final_accuracy);
    fin_a.push_back(a.final_accuracy);
  }
  const double hb = median_of(half_b), hh = median_of(half_h), ha = median_of(half_a);
  const double nb = median_of(near_b), na = median_of(near_a);
  const double fb = median_of(fin_b), fh = median_of(fin_h), fa = median_of(fin_a);
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  const bool fastest = hh < hb && hh < ha;
  const bool adaptive = na <= 0.85 * nb;
  const bool best_final = fb > fh && fb > fa;
  std::ostringstream d;
  d << "t(50%) heuristic=" << format_number(hh) << "s adaptive=" << format_number(ha)
    << "s baseline=" << format_number(hb) << "s; t(final-0.01) adaptive/baseline="
    << fmt("%.3f", na / nb) << " (<=0.85); final baseline=" << fmt("%.4f", fb)
    << " heuristic=" << fmt("%.4f", fh) << " adaptive=" << fmt("%.4f", fa)
    << "; runtime " << fmt("%.2f", secs) << "s (<10)";
  return {fastest && adaptive && best_final && secs < 10, d.str()};
}

// 2. HERL against the fixed strategies on the default population.
Outcome herl_improvement() {
  const auto start = Clock::now();
  auto cfg = parse_config(kRoot / "scenarios/default_1000.conf");
  cfg.strategies = {Strategy::kBaseline, Strategy::kHeuristic, Strategy::kHerl};
  const auto rep = run_comparison(cfg);
  std::vector<double> conv_b, conv_r, fin_h, fin_r;
  for (auto seed : cfg.seeds) {
    const auto& b = cell(rep, Strategy::kBaseline, seed);
    const auto& h = cell(rep, Strategy::kHeuristic, seed);
    const auto& r = cell(rep, Strategy::kHerl, seed);
    for (const auto* x : {&b, &h, &r}) plan_log.add(*x);
    conv_b.push_back(b.convergence_time.value_or(1e300));
    conv_r.push_back(r.convergence_time.value_or(1e300));
    fin_h.push_back(h.final_accuracy);
    fin_r.push_back(r.final_accuracy);
  }
  const double cb = median_of(conv_b), cr = median_of(conv_r);
  const double fh = median_of(fin_h), fr = median_of(fin_r);
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  std::ostringstream d;
  d << "convergence herl/baseline=" << fmt("%.3f", cr / cb) << " (<=0.90, " << format_number(cr)
    << "s vs " << format_number(cb) << "s); final herl=" << fmt("%.4f", fr)
    << " heuristic=" << fmt("%.4f", fh) << "; runtime " << fmt("%.1f", secs) << "s (<300)";
  return {cr <= 0.90 * cb && fr >= fh && secs < 300, d.str()};
}

// 3. Frozen bandit. One tier per environment; every plan satisfies the
// members' security; expected reward per action is fixed and one action
// leads all others by at least the margin.
struct BanditResult {
  double greedy_share = 0;
  double selected_share = 0;
  std::size_t dominant = 0;
  std::size_t final_greedy = 0;
};

BanditResult bandit(const std::vector<ParameterPlan>& grid, const std::vector<double>& mean_reward,
                    std::uint64_t seed) {
  QTable table(grid, 1, {});
  table.init_random(seed, 0.01);
  HerlAgent agent(table, {}, {}, seed);
  Population pop;
  for (ClientId i = 0; i < 10; ++i) {
    ClientProfile c;
    c.id = i;
    pop.clients.push_back(c);
  }
  Tiering tiers;
  tiers.tiers = {{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}};
  const std::vector<double> ref(10, 1.0);
  const std::size_t dominant = static_cast<std::size_t>(
      std::max_element(mean_reward.begin(), mean_reward.end()) - mean_reward.begin());
  auto noise = make_rng(seed, {99});
  std::normal_distribution<double> gauss(0.0, 0.02);

  BanditResult out;
  out.dominant = dominant;
  int counted = 0, greedy_hits = 0, selected_hits = 0;
  for (int round = 1; round <= 1000; ++round) {
    const auto sel = agent.param_selection(tiers, pop, ref);
    plan_log.uses[sel[0].plan]++;
    if (round >= 200) {
      ++counted;
      greedy_hits += agent.table().greedy(sel[0].state) == dominant;
      selected_hits += sel[0].action == dominant;
    }
    TierRoundObservation obs{0, {}, 1.0, 256};
    for (ClientId id : tiers.tiers[0]) {
      obs.participants.push_back({id, mean_reward[sel[0].action] + gauss(noise), 128});
    }
    const StateId next = sel[0].state;
    agent.learn(sel, std::vector{obs}, std::vector{next});
  }
  out.greedy_share = static_cast<double>(greedy_hits) / counted;
  out.selected_share = static_cast<double>(selected_hits) / counted;
  out.final_greedy = agent.table().greedy({0, 0});
  return out;
}

Outcome bandit_convergence() {
  const auto start = Clock::now();
  const auto grid = build_plan_grid({13, 14, 15}, {60, 100, 150, 200, 300}, plan_log.table);
  // A slow tier whose best plan is the smallest admissible one and a fast tier
  // whose best plan is large. Non-dominant actions cost more than they gain.
  auto rewards_for = [&](const ParameterPlan& best, std::uint64_t seed) {
    std::vector<double> r(grid.size());
    auto rng = make_rng(seed, {7});
    for (std::size_t a = 0; a < grid.size(); ++a) {
      r[a] = grid[a] == best ? 0.05 : -0.3 * uniform01(rng);
    }
    return r;
  };
  double worst = 1.0, worst_selected = 1.0;
  bool ordered = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto slow = bandit(grid, rewards_for({13, 60}, seed), seed);
    const auto fast = bandit(grid, rewards_for({15, 200}, seed + 100), seed + 100);
    worst = std::min({worst, slow.greedy_share, fast.greedy_share});
    worst_selected = std::min({worst_selected, slow.selected_share, fast.selected_share});
    ordered = ordered && grid[slow.final_greedy] < grid[fast.final_greedy];
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  std::ostringstream d;
  d << "greedy==dominant in rounds 200-1000: worst " << fmt("%.3f", worst)
    << " over 10 runs (>=0.90); selected==dominant worst " << fmt("%.3f", worst_selected)
    << "; slow-tier plan < fast-tier plan: " << (ordered ? "yes" : "no") << "; runtime "
    << fmt("%.2f", secs) << "s (<10)";
  return {worst >= 0.90 && ordered && secs < 10, d.str()};
}

// 4. Security loss against alpha.
Outcome security_monotonicity() {
  auto cfg = parse_config(kRoot / "scenarios/default_1000.conf");
  cfg.strategies = {Strategy::kHerl};
  const auto sweep = run_sweep(cfg, SweepAxis::kAlpha, {1, 5, 10});
  bool monotone = true;
  long long loss10 = 0, people10 = 0;
  std::ostringstream per_seed;
  for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
    long long prev = -1;
    per_seed << (s ? " " : "") << "seed" << cfg.seeds[s] << ":";
    for (std::size_t v = 0; v < sweep.values.size(); ++v) {
      const auto& r = cell(sweep.comparisons[v], Strategy::kHerl, cfg.seeds[s]);
      plan_log.add(r);
      const long long loss = r.security_loss_last(100);
      per_seed << (v ? "/" : "") << loss;
      if (prev >= 0 && loss > prev) monotone = false;
      prev = loss;
      if (v + 1 == sweep.values.size()) {
        loss10 += loss;
        people10 += r.participants_last(100);
      }
    }
  }
  const double frac = static_cast<double>(loss10) / static_cast<double>(people10);
  std::ostringstream d;
  d << "last-100 loss at alpha 1/5/10 " << per_seed.str() << "; non-increasing: "
    << (monotone ? "yes" : "no") << "; alpha=10 total " << loss10 << "/" << people10 << " = "
    << fmt("%.3f", 100 * frac) << "% (<=1%)";
  return {monotone && frac <= 0.01, d.str()};
}

// 5. Oracles for reward, update and aggregation.
Outcome oracles() {
  Rng rng(20260101);
  double worst_reward = 0, worst_update = 0, worst_avg = 0;
  const auto grid = build_plan_grid({13, 14, 15}, {60, 100, 150, 200, 300}, plan_log.table);
  QTable q(grid, 4, {});
  q.init_random(1, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    // Reward.
    std::vector<TierRoundObservation> obs;
    const int k = 1 + static_cast<int>(uniform_index(rng, 9));
    for (int t = 0; t < k; ++t) {
      TierRoundObservation o;
      o.tier = t;
      o.round_time = 1 + 2000 * uniform01(rng);
      o.plan_security = kSecurityLevels[uniform_index(rng, 3)];
      const int n = 1 + static_cast<int>(uniform_index(rng, 40));
      for (int i = 0; i < n; ++i) {
        o.participants.push_back({static_cast<ClientId>(i), 0.2 * uniform01(rng) - 0.1,
                                  kSecurityLevels[uniform_index(rng, 3)]});
      }
      obs.push_back(std::move(o));
    }
    const double alpha = 20 * uniform01(rng);
    double brute = 0;
    for (const auto& o : obs) {
      for (const auto& p : o.participants) {
        brute += p.delta_util / (static_cast<double>(o.participants.size()) * o.round_time);
        if (o.plan_security < p.security_req) brute -= alpha;
      }
    }
    worst_reward = std::max(worst_reward, std::abs(compute_reward(obs, {alpha}) - brute));

    // Update.
    const StateId s{static_cast<int>(uniform_index(rng, 3)), static_cast<int>(uniform_index(rng, 4))};
    const StateId sn{static_cast<int>(uniform_index(rng, 3)), static_cast<int>(uniform_index(rng, 4))};
    const auto a = static_cast<std::size_t>(uniform_index(rng, q.n_actions()));
    const double r = 2 * uniform01(rng) - 1;
    double best_next = -1e300;
    for (std::size_t x = 0; x < q.n_actions(); ++x) best_next = std::max(best_next, q.value(sn, x));
    const double old = q.value(s, a);
    const double expected = old + 0.1 * (r + 0.9 * best_next - old);
    worst_update = std::max(worst_update, std::abs(update_q(q, s, a, r, sn) - expected));

    // Aggregation.
    std::vector<WeightedValue> u(1 + uniform_index(rng, 150));
    long double num = 0, den = 0;
    for (auto& x : u) {
      x = {uniform01(rng), 1 + uniform_index(rng, 3000)};
      num += static_cast<long double>(x.value) * x.data_size;
      den += x.data_size;
    }
    worst_avg = std::max(worst_avg, std::abs(fedavg(u) - static_cast<double>(num / den)));
  }
  std::ostringstream d;
  d << "1000 trials; max |reward-oracle|=" << fmt("%.2e", worst_reward)
    << " (<=1e-9), |update-oracle|=" << fmt("%.2e", worst_update)
    << " (<=1e-12), |fedavg-oracle|=" << fmt("%.2e", worst_avg) << " (<=1e-12)";
  return {worst_reward <= 1e-9 && worst_update <= 1e-12 && worst_avg <= 1e-12, d.str()};
}

// 6. Every plan used anywhere above is admissible.
Outcome admissibility() {
  long long total = 0, bad = 0;
  for (const auto& [plan, n] : plan_log.uses) {
    total += n;
    if (!validate_plan(plan, plan_log.table).valid) bad += n;
  }
  std::ostringstream d;
  d << bad << " inadmissible of " << total << " plan selections across " << plan_log.uses.size()
    << " distinct plans";
  return {bad == 0 && total > 0, d.str()};
}

// 7. Partition properties over random populations.
Outcome partitions() {
  Rng rng(777);
  int cases = 0, ok = 0;
  std::string first_failure;
  for (int trial = 0; trial < 500; ++trial) {
    const auto n = static_cast<std::size_t>(
        std::lround(std::exp(std::log(10.0) + uniform01(rng) * std::log(1000.0))));
    Population pop;
    std::vector<double> lat(n), util(n);
    for (std::size_t i = 0; i < n; ++i) {
      ClientProfile c;
      c.id = static_cast<ClientId>(i);
      c.security_req = kSecurityLevels[uniform_index(rng, 3)];
      pop.clients.push_back(c);
      // Coarse values so ties are common.
      lat[i] = static_cast<double>(uniform_index(rng, 1 + n / 3));
      util[i] = uniform01(rng);
    }
    const auto latency = latency_criterion([&lat](const ClientProfile& c) { return lat[c.id]; });
    const auto method = trial % 4;
    std::string why;
    Tiering t;
    std::size_t k = 0;
    if (method == 0) {
      const int m = 2 + static_cast<int>(uniform_index(rng, 3));
      k = static_cast<std::size_t>(m * m);
      t = hierarchical_tiering(pop, {security_criterion(), latency}, m * m);
      why = testing::partition_violation(t, n, k);
      std::vector<double> sec(n);
      for (std::size_t i = 0; i < n; ++i) sec[i] = pop.clients[i].security_req;
      if (why.empty()) why = testing::order_violation(t, {sec, lat}, m);
    } else {
      k = 1 + uniform_index(rng, std::min<std::size_t>(n, 32));
      if (method == 1) {
        t = roundtime_tiering(pop, static_cast<int>(k), lat);
        why = testing::partition_violation(t, n, k);
        if (why.empty()) why = testing::order_violation(t, {lat}, static_cast<int>(k));
      } else if (method == 2) {
        t = utility_tiering(pop, static_cast<int>(k), util);
        why = testing::partition_violation(t, n, k);
        if (why.empty()) why = testing::order_violation(t, {util}, static_cast<int>(k));
      } else {
        t = random_tiering(pop, static_cast<int>(k), trial);
        why = testing::partition_violation(t, n, k);
        std::size_t lo = n, hi = 0;
        for (const auto& tier : t.tiers) {
          lo = std::min(lo, tier.size());
          hi = std::max(hi, tier.size());
        }
        if (why.empty() && hi - lo > 1) why = "random tier sizes differ by more than one";
      }
    }
    ++cases;
    if (why.empty()) {
      ++ok;
    } else if (first_failure.empty()) {
      first_failure = "case " + std::to_string(trial) + " (n=" + std::to_string(n) + "): " + why;
    }
  }
  std::ostringstream d;
  d << ok << "/" << cases << " cases hold disjointness, coverage, exact K and order";
  if (!first_failure.empty()) d << "; first failure " << first_failure;
  return {ok == cases && cases == 500, d.str()};
}

// 8. Agent wall-clock per round at K=9.
Outcome agent_latency() {
  auto cfg = parse_config(kRoot / "scenarios/default_1000.conf");
  auto exp = cfg.cell(Strategy::kHerl, 1);
  const auto pop = build_population(exp);
  const auto ref_plan = reference_plan(exp);
  std::vector<double> ref(pop.size());
  for (const auto& c : pop.clients) ref[c.id] = estimate_round_latency(c, ref_plan, exp.cost, exp.n_params);
  const auto tiers = hierarchical_tiering(
      pop, {security_criterion(), latency_criterion([&ref](const ClientProfile& c) { return ref[c.id]; })}, 9);
  QTable table(exp.grid, exp.latency_buckets, exp.q);
  table.init_random(1, exp.q_init_max);
  HerlAgent agent(table, exp.reward, quantile_edges(ref, exp.latency_buckets), 1);
  Rng rng(3);
  double worst = 0, total = 0;
  const int rounds = 1000;
  for (int r = 0; r < rounds; ++r) {
    std::vector<TierRoundObservation> obs;
    for (int k = 0; k < 9; ++k) {
      TierRoundObservation o{k, {}, 100 + 500 * uniform01(rng), 256};
      for (int i = 0; i < 11; ++i) {
        o.participants.push_back({tiers.tiers[k][i % tiers.tiers[k].size()], 0.01 * uniform01(rng), 128});
      }
      obs.push_back(std::move(o));
    }
    const auto start = Clock::now();
    const auto sel = agent.param_selection(tiers, pop, ref);
    std::vector<StateId> next;
    for (const auto& s : sel) next.push_back(s.state);
    agent.learn(sel, obs, next);
    const double dt = std::chrono::duration<double>(Clock::now() - start).count();
    worst = std::max(worst, dt);
    total += dt;
  }
  std::ostringstream d;
  d << "param_selection + 9 updates: mean " << fmt("%.4f", 1e3 * total / rounds) << " ms, max "
    << fmt("%.4f", 1e3 * worst) << " ms over " << rounds << " rounds (<1000 ms)";
  return {worst < 1.0, d.str()};
}

// 9. Byte-identical CLI output for a repeated seed.
std::map<std::string, std::string> read_tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    out[fs::relative(e.path(), dir).string()] = s.str();
  }
  return out;
}

Outcome determinism() {
  const auto base = fs::temp_directory_path() / "hefl_acceptance_determinism";
  fs::remove_all(base);
  std::vector<std::map<std::string, std::string>> trees;
  for (const char* run : {"a", "b"}) {
    const auto out = base / run;
    const std::string cmd = std::string("\"") + HEFL_CLI_PATH + "\" run \"" +
                            (kRoot / "scenarios/default_1000.conf").string() + "\" --seed 7 --out \"" +
                            out.string() + "\" > \"" + (base / (std::string(run) + ".stdout")).string() +
                            "\" 2>/dev/null";
    fs::create_directories(base);
    if (std::system(cmd.c_str()) != 0) return {false, "CLI run failed: " + cmd};
    trees.push_back(read_tree(out));
  }
  std::size_t csvs = 0;
  for (const auto& [name, _] : trees[0]) csvs += name.ends_with(".csv");
  const bool same = trees[0] == trees[1] && trees[0].count("summary.csv") == 1;
  std::ostringstream d;
  d << trees[0].size() << " files (" << csvs << " CSV incl. summary) compared; "
    << (same ? "byte-identical" : "outputs differ");
  return {same, d.str()};
}

}  // namespace

int main() {
  run(1, "motivation ordering", motivation);
  run(2, "HERL improvement", herl_improvement);
  run(3, "bandit convergence", bandit_convergence);
  run(4, "security monotonicity", security_monotonicity);
  run(5, "reward/Q/fedavg oracles", oracles);
  run(6, "plan admissibility", admissibility);
  run(7, "tiering partition properties", partitions);
  run(8, "agent latency", agent_latency);
  run(9, "determinism", determinism);
  std::printf("%d of 9 criteria passed\n", 9 - failures);
  return failures == 0 ? 0 : 1;
}
