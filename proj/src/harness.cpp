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

#include "hefl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "hefl/kv_config.hpp"

namespace hefl {

namespace {

std::string join_lines(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : "\n") + s;
  return out;
}

using Setter = std::function<void(ScenarioConfig&, const std::string&)>;

struct Field {
  std::string section;
  std::string key;
  bool required = false;
  Setter set;
};

std::vector<int> to_ints(const std::vector<long long>& v) {
  return {v.begin(), v.end()};
}

ParameterPlan plan_value(const std::string& v) { return ParameterPlan::parse(v); }

// Relative paths resolve against the scenario file's directory; filled in
// by the caller through `base_dir`.
std::vector<Field> schema(const std::filesystem::path& base_dir, std::optional<std::filesystem::path>& table_path) {
  auto path = [base_dir](const std::string& v) {
    std::filesystem::path p(v);
    return p.is_absolute() ? p : base_dir / p;
  };
  return {
      {"scenario", "name", true, [](ScenarioConfig& c, const std::string& v) { c.name = v; }},
      {"scenario", "description", false, [](ScenarioConfig&, const std::string&) {}},

      {"population", "trace", true,
       [path](ScenarioConfig& c, const std::string& v) { c.base.trace = path(v); }},
      {"population", "n_clients", true,
       [](ScenarioConfig& c, const std::string& v) {
         const auto n = parse_int(v);
         if (n < 1) throw InputError("must be at least 1");
         c.base.n_clients = static_cast<std::size_t>(n);
       }},
      {"population", "security_weights", false,
       [](ScenarioConfig& c, const std::string& v) {
         const auto w = parse_double_list(v);
         if (w.size() != 3) throw InputError("expected three weights for 128, 192, 256 bits");
         c.base.security_weights = {w[0], w[1], w[2]};
       }},
      {"population", "partition", false,
       [](ScenarioConfig& c, const std::string& v) {
         if (v == "dirichlet") c.base.partition = DataPartition::kDirichlet;
         else if (v == "equal") c.base.partition = DataPartition::kEqual;
         else throw InputError("expected 'dirichlet' or 'equal'");
       }},
      {"population", "dirichlet_alpha", false,
       [](ScenarioConfig& c, const std::string& v) { c.base.dirichlet_alpha = parse_double(v); }},
      {"population", "total_samples", false,
       [](ScenarioConfig& c, const std::string& v) {
         const auto n = parse_int(v);
         if (n < 1) throw InputError("must be positive");
         c.base.total_samples = static_cast<std::uint64_t>(n);
       }},
      {"population", "samples_per_client", false,
       [](ScenarioConfig& c, const std::string& v) {
         const auto n = parse_int(v);
         if (n < 1) throw InputError("must be positive");
         c.base.samples_per_client = static_cast<std::uint64_t>(n);
       }},

      {"he", "security_table", false,
       [path, &table_path](ScenarioConfig&, const std::string& v) { table_path = path(v); }},
      {"he", "log_n", true, [](ScenarioConfig&, const std::string& v) { parse_int_list(v); }},
      {"he", "q_bits", true, [](ScenarioConfig&, const std::string& v) { parse_int_list(v); }},
      {"he", "n_params", true,
       [](ScenarioConfig& c, const std::string& v) {
         const auto n = parse_int(v);
         if (n < 1) throw InputError("must be positive");
         c.base.n_params = static_cast<std::uint64_t>(n);
       }},
      {"he", "baseline_plan", false,
       [](ScenarioConfig& c, const std::string& v) { c.base.plans.baseline = plan_value(v); }},
      {"he", "heuristic_plan", false,
       [](ScenarioConfig& c, const std::string& v) { c.base.plans.heuristic = plan_value(v); }},
      {"he", "adaptive_low_plan", false,
       [](ScenarioConfig& c, const std::string& v) { c.base.plans.adaptive_low = plan_value(v); }},
      {"he", "adaptive_high_plan", false,
       [](ScenarioConfig& c, const std::string& v) { c.base.plans.adaptive_high = plan_value(v); }},
      {"he", "reference_plan", false,
       [](ScenarioConfig& c, const std::string& v) { c.base.reference_plan = plan_value(v); }},

      {"cost_model", "he_coeff", false,
       [](ScenarioConfig& c, const std::string& v) { c.base.cost.he_coeff = parse_double(v); }},
      {"cost_model", "overhead_bits", false,
       [](ScenarioConfig& c, const std::string& v) { c.base.cost.overhead_bits = parse_double(v); }},
      {"cost_model", "depth", false,
       [](ScenarioConfig& c, const std::string& v) { c.base.cost.depth = parse_double(v); }},
      {"cost_model", "precision_coeff", false,
       [](ScenarioConfig& c, const std::string& v) { c.base.cost.precision_coeff = parse_double(v); }},

      {"tiering", "method", false,
       [](ScenarioConfig& c, const std::string& v) { c.base.tiering = parse_tiering_method(v); }},
      {"tiering", "criteria", false,
       [](ScenarioConfig& c, const std::string& v) {
         c.base.criteria.clear();
         for (const auto& name : split_list(v)) c.base.criteria.push_back(parse_criterion_kind(name));
       }},
      {"tiering", "k", true,
       [](ScenarioConfig& c, const std::string& v) { c.base.k = static_cast<int>(parse_int(v)); }},
      {"tiering", "retier_every", false,
       [](ScenarioConfig& c, const std::string& v) {
         c.base.retier_every = static_cast<int>(parse_int(v));
       }},

      {"trainer", "a_max", false,
       [](ScenarioConfig& c, const std::string& v) { c.base.trainer.a_max = parse_double(v); }},
      {"trainer", "rate", false,
       [](ScenarioConfig& c, const std::string& v) { c.base.trainer.rate = parse_double(v); }},
      {"trainer", "noise_sd", false,
       [](ScenarioConfig& c, const std::string& v) { c.base.trainer.noise_sd = parse_double(v); }},
      {"trainer", "heterogeneity_sd", false,
       [](ScenarioConfig& c, const std::string& v) {
         c.base.trainer.heterogeneity_sd = parse_double(v);
       }},
      {"trainer", "initial_accuracy", false,
       [](ScenarioConfig& c, const std::string& v) {
         c.base.trainer.initial_accuracy = parse_double(v);
       }},

      {"rl", "gamma", false,
       [](ScenarioConfig& c, const std::string& v) { c.base.q.gamma = parse_double(v); }},
      {"rl", "mu", false, [](ScenarioConfig& c, const std::string& v) { c.base.q.mu = parse_double(v); }},
      {"rl", "epsilon", false,
       [](ScenarioConfig& c, const std::string& v) { c.base.q.epsilon = parse_double(v); }},
      {"rl", "alpha", false,
       [](ScenarioConfig& c, const std::string& v) { c.base.reward.alpha = parse_double(v); }},
      {"rl", "q_init_max", false,
       [](ScenarioConfig& c, const std::string& v) { c.base.q_init_max = parse_double(v); }},
      {"rl", "latency_buckets", false,
       [](ScenarioConfig& c, const std::string& v) {
         c.base.latency_buckets = static_cast<int>(parse_int(v));
       }},
      {"rl", "latency_edges", false,
       [](ScenarioConfig& c, const std::string& v) {
         c.base.latency_edges = v == "auto" ? std::vector<double>{} : parse_double_list(v);
       }},

      {"run", "rounds", true,
       [](ScenarioConfig& c, const std::string& v) {
         const auto n = parse_int(v);
         if (n < 0) throw InputError("must be non-negative");
         c.base.rounds = static_cast<std::uint64_t>(n);
       }},
      {"run", "participation_rate", false,
       [](ScenarioConfig& c, const std::string& v) { c.base.participation_rate = parse_double(v); }},
      {"run", "seeds", false,
       [](ScenarioConfig& c, const std::string& v) {
         c.seeds.clear();
         for (auto s : parse_int_list(v)) {
           if (s < 0) throw InputError("seeds must be non-negative");
           c.seeds.push_back(static_cast<std::uint64_t>(s));
         }
         if (c.seeds.empty()) throw InputError("at least one seed is required");
       }},
      {"run", "strategies", false,
       [](ScenarioConfig& c, const std::string& v) {
         c.strategies.clear();
         for (const auto& name : split_list(v)) c.strategies.push_back(parse_strategy(name));
         if (c.strategies.empty()) throw InputError("at least one strategy is required");
       }},
      {"run", "convergence_fraction", false,
       [](ScenarioConfig& c, const std::string& v) { c.base.convergence_fraction = parse_double(v); }},
      {"run", "stop_accuracy", false,
       [](ScenarioConfig& c, const std::string& v) { c.base.stop_accuracy = parse_double(v); }},
      {"run", "parallelism", false,
       [](ScenarioConfig& c, const std::string& v) {
         const auto n = parse_int(v);
         if (n < 1) throw InputError("must be at least 1");
         c.parallelism = static_cast<int>(n);
       }},

      {"sweep", "axis", false,
       [](ScenarioConfig& c, const std::string& v) {
         if (!c.sweep) c.sweep.emplace();
         c.sweep->axis = parse_sweep_axis(v);
       }},
      {"sweep", "values", false,
       [](ScenarioConfig& c, const std::string& v) {
         if (!c.sweep) c.sweep.emplace();
         c.sweep->values = parse_double_list(v);
         if (c.sweep->values.empty()) throw InputError("sweep needs at least one value");
       }},
  };
}

void check_sweep_value(const ScenarioConfig& cfg, SweepAxis axis, double value) {
  auto probe = cfg.cell(cfg.strategies.front(), cfg.seeds.front());
  if (axis == SweepAxis::kK) {
    if (value != std::floor(value) || value < 1) {
      throw ConfigError("K sweep values must be positive integers, got " + format_number(value));
    }
    probe.k = static_cast<int>(value);
  } else {
    probe.reward.alpha = value;
  }
  probe.validate();
}

}  // namespace

ScenarioError::ScenarioError(std::vector<std::string> violations)
    : ConfigError(join_lines(violations)), violations_(std::move(violations)) {}

std::string to_string(SweepAxis a) { return a == SweepAxis::kK ? "K" : "alpha"; }

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "K" || name == "k") return SweepAxis::kK;
  if (name == "alpha") return SweepAxis::kAlpha;
  throw InputError("unknown sweep axis '" + name + "' (expected K or alpha)");
}

ExperimentConfig ScenarioConfig::cell(Strategy s, std::uint64_t seed) const {
  ExperimentConfig c = base;
  c.strategy = s;
  c.seed = seed;
  return c;
}

ScenarioConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir,
                                 const std::string& source) {
  KvDocument doc;
  try {
    doc = KvDocument::parse(text, source);
  } catch (const ParseError& e) {
    throw ScenarioError({e.what()});
  }
  if (doc.empty()) throw ScenarioError({source + ": configuration is empty"});

  ScenarioConfig cfg;
  cfg.source = source;
  std::optional<std::filesystem::path> table_path;
  const auto fields = schema(base_dir, table_path);
  std::vector<std::string> errors;

  std::set<std::pair<std::string, std::string>> known;
  for (const auto& f : fields) known.emplace(f.section, f.key);
  const std::set<std::string> passthrough = {"security_table"};
  for (const auto& section : doc.section_names()) {
    if (passthrough.contains(section)) continue;
    for (const auto& key : doc.keys(section)) {
      if (!known.contains({section, key})) {
        errors.push_back(source + ":" + std::to_string(doc.find(section, key)->line) +
                         ": unknown key '" + key + "' in [" + section + "]");
      }
    }
  }

  for (const auto& f : fields) {
    const auto* entry = doc.find(f.section, f.key);
    if (!entry) {
      if (f.required) errors.push_back(source + ": missing required key [" + f.section + "] " + f.key);
      continue;
    }
    try {
      f.set(cfg, entry->value);
    } catch (const std::exception& e) {
      errors.push_back(source + ":" + std::to_string(entry->line) + ": [" + f.section + "] " +
                       f.key + ": " + e.what());
    }
  }

  // Security table: inline section wins over a referenced file.
  try {
    if (doc.has_section("security_table")) {
      cfg.base.table = SecurityTable::from_document(doc);
    } else if (table_path) {
      cfg.base.table = SecurityTable::load(*table_path);
    } else {
      errors.push_back(source + ": missing [he] security_table (or an inline [security_table])");
    }
  } catch (const std::exception& e) {
    errors.push_back(e.what());
  }

  if (!cfg.base.table.empty()) {
    const auto* log_n = doc.find("he", "log_n");
    const auto* q_bits = doc.find("he", "q_bits");
    if (log_n && q_bits) {
      try {
        const auto ns = to_ints(parse_int_list(log_n->value));
        const auto qs = to_ints(parse_int_list(q_bits->value));
        for (int n : ns) {
          if (!cfg.base.table.covers(n)) {
            throw ConfigError("log_n=" + std::to_string(n) + " is not in the security table");
          }
        }
        cfg.base.grid = build_plan_grid(ns, qs, cfg.base.table);
        if (cfg.base.grid.empty()) throw ConfigError("no admissible plan in the grid");
      } catch (const std::exception& e) {
        errors.push_back(source + ":" + std::to_string(log_n->line) + ": [he] grid: " + e.what());
      }
    }
  }

  if (errors.empty()) {
    // Cross-field checks run one at a time so every violation is reported.
    const std::vector<std::function<void()>> checks = {
        [&] { cfg.base.cost.validate(); },
        [&] { cfg.base.trainer.validate(); },
        [&] { cfg.base.q.validate(); },
        [&] { cfg.cell(cfg.strategies.front(), cfg.seeds.front()).validate(); },
        [&] {
          if (cfg.sweep) {
            if (cfg.sweep->values.empty()) throw ConfigError("[sweep] values missing");
            for (double v : cfg.sweep->values) check_sweep_value(cfg, cfg.sweep->axis, v);
          }
        },
    };
    std::set<std::string> seen;
    try {
      load_traces(cfg.base.trace, cfg.base.n_clients, 0);
    } catch (const std::exception& e) {
      errors.push_back(source + ": [population] trace: " + e.what());
    }
    for (const auto& check : checks) {
      try {
        check();
      } catch (const std::exception& e) {
        if (seen.insert(e.what()).second) errors.push_back(source + ": " + e.what());
      }
    }
  }

  if (!errors.empty()) throw ScenarioError(std::move(errors));
  return cfg;
}

ScenarioConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError({"cannot open '" + path.string() + "'"});
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path.parent_path(), path.string());
}

const StrategySummary* ComparisonReport::find(Strategy s) const {
  for (const auto& row : summary) {
    if (row.strategy == s) return &row;
  }
  return nullptr;
}

bool ComparisonReport::any_failed() const {
  return std::any_of(cells.begin(), cells.end(), [](const CellResult& c) { return !c.result; });
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

template <typename Fn>
void parallel_for(std::size_t n, int parallelism, Fn fn) {
  const auto workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, parallelism)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << content;
}

std::string cell_stem(const CellResult& c) {
  return to_string(c.strategy) + "_seed" + std::to_string(c.seed);
}

void emit_comparison(const ComparisonReport& report, const std::filesystem::path& dir) {
  for (const auto& cell : report.cells) {
    const auto stem = dir / "runs" / cell_stem(cell);
    if (!cell.result) {
      write_file(stem.string() + ".error.txt", cell.error + "\n");
      continue;
    }
    std::ostringstream csv;
    write_run_csv(*cell.result, csv);
    write_file(stem.string() + ".csv", csv.str());
    write_file(stem.string() + ".json", summary_json(*cell.result).dump(2) + "\n");
    if (cell.result->qtable) {
      write_file(stem.string() + ".qtable.json", cell.result->qtable->to_json().dump(2) + "\n");
    }
  }
  std::ostringstream summary;
  write_summary_csv(report, summary);
  write_file(dir / "summary.csv", summary.str());

  std::map<Strategy, std::ostringstream> plots;
  for (const auto& cell : report.cells) {
    if (!cell.result) continue;
    auto& out = plots[cell.strategy];
    if (out.tellp() == 0) out << "seed,round,sim_time_s,global_acc\n";
    for (const auto& r : cell.result->rounds) {
      out << cell.seed << ',' << r.round << ',' << format_number(r.sim_time) << ','
          << format_number(r.global_accuracy) << '\n';
    }
  }
  for (auto& [strategy, out] : plots) {
    write_file(dir / ("plot_" + to_string(strategy) + ".csv"), out.str());
  }
}

std::string optional_number(const std::optional<double>& v) {
  return v ? format_number(*v) : "";
}

}  // namespace

ComparisonReport run_comparison(const ScenarioConfig& cfg, const std::filesystem::path& out_dir) {
  ComparisonReport report;
  report.scenario = cfg.name;
  for (auto s : cfg.strategies) {
    for (auto seed : cfg.seeds) report.cells.push_back({s, seed, std::nullopt, {}});
  }
  parallel_for(report.cells.size(), cfg.parallelism, [&](std::size_t i) {
    auto& cell = report.cells[i];
    try {
      cell.result = run_experiment(cfg.cell(cell.strategy, cell.seed));
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
  });

  for (auto s : cfg.strategies) {
    StrategySummary row;
    row.strategy = s;
    std::vector<double> acc, conv, loss, loss_last, time;
    for (const auto& cell : report.cells) {
      if (cell.strategy != s) continue;
      ++row.runs;
      if (!cell.result) {
        ++row.failed;
        continue;
      }
      const auto& r = *cell.result;
      acc.push_back(r.final_accuracy);
      if (r.convergence_time) conv.push_back(*r.convergence_time);
      loss.push_back(static_cast<double>(r.total_security_loss));
      loss_last.push_back(static_cast<double>(r.security_loss_last(100)));
      time.push_back(r.rounds.empty() ? 0.0 : r.rounds.back().sim_time);
    }
    row.final_accuracy = median(acc);
    if (!conv.empty()) row.convergence_time = median(conv);
    row.security_loss = median(loss);
    row.security_loss_last100 = median(loss_last);
    row.sim_time = median(time);
    report.summary.push_back(row);
  }

  if (!out_dir.empty()) emit_comparison(report, out_dir);
  return report;
}

SweepReport run_sweep(const ScenarioConfig& cfg, SweepAxis axis, const std::vector<double>& values,
                      const std::filesystem::path& out_dir) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  for (double v : values) check_sweep_value(cfg, axis, v);

  SweepReport report;
  report.axis = axis;
  report.values = values;
  for (double v : values) {
    ScenarioConfig point = cfg;
    if (axis == SweepAxis::kK) {
      point.base.k = static_cast<int>(v);
    } else {
      point.base.reward.alpha = v;
    }
    const auto sub = out_dir.empty()
                         ? std::filesystem::path{}
                         : out_dir / (to_string(axis) + "_" + format_number(v));
    report.comparisons.push_back(run_comparison(point, sub));
  }
  if (!out_dir.empty()) {
    std::ostringstream csv;
    write_sweep_csv(report, csv);
    write_file(out_dir / "sweep.csv", csv.str());
  }
  return report;
}

void write_summary_csv(const ComparisonReport& report, std::ostream& out) {
  out << "strategy,runs,failed,final_accuracy,convergence_time_s,security_loss,"
         "security_loss_last100,sim_time_s\n";
  for (const auto& row : report.summary) {
    out << to_string(row.strategy) << ',' << row.runs << ',' << row.failed << ','
        << format_number(row.final_accuracy) << ',' << optional_number(row.convergence_time) << ','
        << format_number(row.security_loss) << ',' << format_number(row.security_loss_last100)
        << ',' << format_number(row.sim_time) << '\n';
  }
}

void write_sweep_csv(const SweepReport& report, std::ostream& out) {
  out << to_string(report.axis)
      << ",strategy,runs,failed,final_accuracy,convergence_time_s,security_loss,"
         "security_loss_last100,sim_time_s\n";
  for (std::size_t i = 0; i < report.values.size(); ++i) {
    for (const auto& row : report.comparisons[i].summary) {
      out << format_number(report.values[i]) << ',' << to_string(row.strategy) << ',' << row.runs
          << ',' << row.failed << ',' << format_number(row.final_accuracy) << ','
          << optional_number(row.convergence_time) << ',' << format_number(row.security_loss)
          << ',' << format_number(row.security_loss_last100) << ',' << format_number(row.sim_time)
          << '\n';
    }
  }
}

}  // namespace hefl
