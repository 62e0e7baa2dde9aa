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

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hefl/harness.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRunFailure = 1;
constexpr int kExitConfigError = 2;

constexpr const char* kOutputEnv = "HEFL_OUTPUT_DIR";

// --out wins, then $HEFL_OUTPUT_DIR, then out/<scenario>.
fs::path output_dir(const std::string& flag, const hefl::ScenarioConfig& cfg) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kOutputEnv); env && *env) return env;
  return fs::path("out") / cfg.name;
}

void print_summary(const hefl::ComparisonReport& report) {
  hefl::write_summary_csv(report, std::cout);
  for (const auto& cell : report.cells) {
    if (!cell.result) {
      std::cerr << "run failed: " << hefl::to_string(cell.strategy) << " seed " << cell.seed
                << ": " << cell.error << '\n';
    }
  }
}

std::vector<fs::path> qtable_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& root : {dir, dir / "runs"}) {
    if (!fs::is_directory(root)) continue;
    for (const auto& entry : fs::directory_iterator(root)) {
      const auto name = entry.path().filename().string();
      if (entry.is_regular_file() && name.ends_with(".qtable.json")) files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

void dump_qtable(const fs::path& file, std::ostream& out) {
  std::ifstream in(file);
  const auto table = hefl::QTable::from_json(nlohmann::json::parse(in));
  out << "# " << file.filename().string() << '\n' << "state";
  for (const auto& a : table.actions()) out << ',' << a.to_string();
  out << ",greedy\n";
  for (int s = 0; s < 3; ++s) {
    for (int l = 0; l < table.latency_buckets(); ++l) {
      const hefl::StateId id{s, l};
      out << id.to_string();
      for (std::size_t a = 0; a < table.n_actions(); ++a) {
        out << ',' << hefl::format_number(table.value(id, a));
      }
      out << ',' << table.actions()[table.greedy(id)].to_string() << '\n';
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tiered HE parameter selection for federated learning: simulator and harness"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_flag;
  std::vector<std::uint64_t> seed_override;
  int parallel = 0;

  auto* run = app.add_subcommand("run", "Run every strategy x seed cell of a scenario");
  run->add_option("config", config_path, "Scenario file")->required();
  run->add_option("--seed", seed_override, "Replace the scenario's seed list");
  run->add_option("--out", out_flag, "Output directory (overrides $HEFL_OUTPUT_DIR)");
  run->add_option("--parallel", parallel, "Concurrent cells")->check(CLI::PositiveNumber);

  std::string axis_name;
  std::vector<double> values;
  auto* sweep = app.add_subcommand("sweep", "Run one comparison per axis value");
  sweep->add_option("config", config_path, "Scenario file")->required();
  sweep->add_option("--axis", axis_name, "K or alpha");
  sweep->add_option("--values", values, "Axis values");
  sweep->add_option("--seed", seed_override, "Replace the scenario's seed list");
  sweep->add_option("--out", out_flag, "Output directory (overrides $HEFL_OUTPUT_DIR)");
  sweep->add_option("--parallel", parallel, "Concurrent cells")->check(CLI::PositiveNumber);

  auto* validate = app.add_subcommand("validate", "Check a scenario and report every violation");
  validate->add_option("config", config_path, "Scenario file")->required();

  std::string run_dir;
  auto* dump = app.add_subcommand("dump-qtable", "Print the learned Q-tables of a run directory");
  dump->add_option("run-dir", run_dir, "Directory written by run or sweep")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfigError;
  }

  if (dump->parsed()) {
    const auto files = qtable_files(run_dir);
    if (files.empty()) {
      std::cerr << "no Q-table files under '" << run_dir << "'\n";
      return kExitRunFailure;
    }
    try {
      for (const auto& f : files) dump_qtable(f, std::cout);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitRunFailure;
    }
    return kExitOk;
  }

  hefl::ScenarioConfig cfg;
  try {
    cfg = hefl::parse_config(config_path);
    if (!seed_override.empty()) cfg.seeds = seed_override;
    if (parallel > 0) cfg.parallelism = parallel;
  } catch (const hefl::ScenarioError& e) {
    for (const auto& v : e.violations()) std::cerr << "error: " << v << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfigError;
  }

  if (validate->parsed()) {
    std::cout << "ok: " << cfg.name << " (" << cfg.base.n_clients << " clients, K=" << cfg.base.k
              << ", " << cfg.base.grid.size() << " plans, " << cfg.strategies.size()
              << " strategies x " << cfg.seeds.size() << " seeds)\n";
    return kExitOk;
  }

  const auto out = output_dir(out_flag, cfg);
  try {
    if (run->parsed()) {
      const auto report = hefl::run_comparison(cfg, out);
      print_summary(report);
      std::cerr << "wrote " << out.string() << '\n';
      return report.any_failed() ? kExitRunFailure : kExitOk;
    }

    hefl::SweepAxis axis;
    if (!axis_name.empty()) {
      axis = hefl::parse_sweep_axis(axis_name);
    } else if (cfg.sweep) {
      axis = cfg.sweep->axis;
    } else {
      std::cerr << "error: --axis is required (the scenario has no [sweep] section)\n";
      return kExitConfigError;
    }
    if (values.empty() && cfg.sweep && cfg.sweep->axis == axis) values = cfg.sweep->values;
    if (values.empty()) {
      std::cerr << "error: sweep needs at least one value\n";
      return kExitConfigError;
    }

    hefl::SweepReport report;
    try {
      report = hefl::run_sweep(cfg, axis, values, out);
    } catch (const hefl::ConfigError& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitConfigError;
    } catch (const std::invalid_argument& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitConfigError;
    }
    hefl::write_sweep_csv(report, std::cout);
    bool failed = false;
    for (const auto& c : report.comparisons) failed = failed || c.any_failed();
    std::cerr << "wrote " << out.string() << '\n';
    return failed ? kExitRunFailure : kExitOk;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRunFailure;
  }
}
