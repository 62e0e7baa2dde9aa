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

#ifndef HEFL_HARNESS_HPP_
#define HEFL_HARNESS_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hefl/error.hpp"
#include "hefl/fl_sim.hpp"

namespace hefl {

// Every violation found while reading a scenario, not just the first.
class ScenarioError : public ConfigError {
 public:
  explicit ScenarioError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

enum class SweepAxis { kK, kAlpha };
std::string to_string(SweepAxis a);
SweepAxis parse_sweep_axis(const std::string& name);

struct SweepSpec {
  SweepAxis axis = SweepAxis::kAlpha;
  std::vector<double> values;
};

struct ScenarioConfig {
  std::string name;
  std::filesystem::path source;
  // Strategy and seed are filled in per cell.
  ExperimentConfig base;
  std::vector<std::uint64_t> seeds{1};
  std::vector<Strategy> strategies{Strategy::kBaseline};
  int parallelism = 1;
  std::optional<SweepSpec> sweep;

  ExperimentConfig cell(Strategy s, std::uint64_t seed) const;
};

// Reads and fully validates a scenario file. Throws ScenarioError listing all
// violations (unknown keys, missing required keys, bad values, cross-field
// conflicts).
ScenarioConfig parse_config(const std::filesystem::path& path);
ScenarioConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir,
                                 const std::string& source = "<string>");

struct CellResult {
  Strategy strategy = Strategy::kBaseline;
  std::uint64_t seed = 0;
  std::optional<ExperimentResult> result;
  std::string error;
};

struct StrategySummary {
  Strategy strategy = Strategy::kBaseline;
  int runs = 0;
  int failed = 0;
  double final_accuracy = 0.0;
  std::optional<double> convergence_time;
  double security_loss = 0.0;
  double security_loss_last100 = 0.0;
  double sim_time = 0.0;
};

struct ComparisonReport {
  std::string scenario;
  std::vector<CellResult> cells;  // strategy-major, seeds in config order
  std::vector<StrategySummary> summary;

  const StrategySummary* find(Strategy s) const;
  bool any_failed() const;
};

double median(std::vector<double> values);

// Runs every (strategy, seed) cell, up to cfg.parallelism at a time. When
// out_dir is non-empty, writes runs/<strategy>_seed<seed>.{csv,json},
// Q-tables for learning runs, summary.csv and plot_<strategy>.csv.
ComparisonReport run_comparison(const ScenarioConfig& cfg,
                                const std::filesystem::path& out_dir = {});

struct SweepReport {
  SweepAxis axis = SweepAxis::kAlpha;
  std::vector<double> values;
  std::vector<ComparisonReport> comparisons;  // parallel to values
};

// One comparison per axis value; writes <axis>_<value>/ subdirectories and
// sweep.csv when out_dir is non-empty. Throws ConfigError on an empty value
// list or a value the scenario rules reject.
SweepReport run_sweep(const ScenarioConfig& cfg, SweepAxis axis, const std::vector<double>& values,
                      const std::filesystem::path& out_dir = {});

void write_summary_csv(const ComparisonReport& report, std::ostream& out);
void write_sweep_csv(const SweepReport& report, std::ostream& out);

}  // namespace hefl

#endif  // HEFL_HARNESS_HPP_
