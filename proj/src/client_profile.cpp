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

#include "hefl/client_profile.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

#include "hefl/error.hpp"
#include "hefl/kv_config.hpp"
#include "hefl/rng.hpp"

namespace hefl {

namespace {

struct TraceRow {
  double compute_speed;
  double bandwidth;
  double base_train_time;
};

std::vector<TraceRow> read_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open trace '" + path.string() + "'");
  const std::string source = path.string();

  std::string line;
  int line_no = 0;
  int col_speed = -1, col_bw = -1, col_train = -1;
  std::size_t n_cols = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cols = split_list(line);
    n_cols = cols.size();
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (cols[i] == "compute_speed") col_speed = static_cast<int>(i);
      else if (cols[i] == "bandwidth_bps") col_bw = static_cast<int>(i);
      else if (cols[i] == "base_train_time_s") col_train = static_cast<int>(i);
    }
    if (col_speed < 0 || col_bw < 0 || col_train < 0) {
      throw ParseError(source, line_no,
                       "header must name compute_speed, bandwidth_bps and base_train_time_s");
    }
    break;
  }
  if (n_cols == 0) throw InputError("trace '" + source + "' is empty");

  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    try {
      auto cols = split_list(line);
      if (cols.size() != n_cols) {
        throw InputError("expected " + std::to_string(n_cols) + " columns, got " +
                         std::to_string(cols.size()));
      }
      TraceRow row{parse_double(cols[col_speed]), parse_double(cols[col_bw]),
                   parse_double(cols[col_train])};
      if (!(row.compute_speed > 0) || !(row.bandwidth > 0) || !(row.base_train_time >= 0)) {
        throw InputError("speed and bandwidth must be positive, train time non-negative");
      }
      rows.push_back(row);
    } catch (const InputError& e) {
      throw ParseError(source, line_no, e.what());
    }
  }
  if (rows.empty()) throw InputError("trace '" + source + "' has no data rows");
  return rows;
}

}  // namespace

void Population::validate() const {
  if (clients.empty()) throw InputError("population is empty");
  for (std::size_t i = 0; i < clients.size(); ++i) {
    const auto& c = clients[i];
    if (c.id != i) throw InputError("client ids must be dense and ordered");
    if (!(c.compute_speed > 0) || !(c.bandwidth > 0)) {
      throw InputError("client " + std::to_string(c.id) + ": speed and bandwidth must be positive");
    }
    if (c.data_size < 1) throw InputError("client " + std::to_string(c.id) + ": empty dataset");
    if (security_level_index(c.security_req) < 0) {
      throw InputError("client " + std::to_string(c.id) + ": unsupported security level");
    }
  }
}

Population load_traces(const std::filesystem::path& path, std::size_t n_clients,
                       std::uint64_t seed) {
  if (n_clients == 0) throw InputError("n_clients must be at least 1");
  const auto rows = read_trace(path);

  std::vector<std::size_t> picks(n_clients);
  auto rng = make_rng(seed, {tag(Stream::kTraceSampling)});
  if (rows.size() >= n_clients) {
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), 0);
    if (rows.size() > n_clients) {
      // Partial Fisher-Yates; a full trace keeps file order.
      for (std::size_t i = 0; i < n_clients; ++i) {
        std::swap(order[i], order[i + uniform_index(rng, rows.size() - i)]);
      }
    }
    std::copy_n(order.begin(), n_clients, picks.begin());
  } else {
    for (auto& p : picks) p = uniform_index(rng, rows.size());
  }

  Population pop;
  pop.seed = seed;
  pop.clients.reserve(n_clients);
  for (std::size_t i = 0; i < n_clients; ++i) {
    const auto& r = rows[picks[i]];
    ClientProfile c;
    c.id = static_cast<ClientId>(i);
    c.compute_speed = r.compute_speed;
    c.bandwidth = r.bandwidth;
    c.base_train_time = r.base_train_time;
    pop.clients.push_back(c);
  }
  return pop;
}

Population assign_security(Population pop, const std::array<double, 3>& weights,
                           std::uint64_t seed) {
  double total = 0;
  for (double w : weights) {
    if (!(w >= 0) || !std::isfinite(w)) throw InputError("security weights must be non-negative");
    total += w;
  }
  if (!(total > 0)) throw InputError("security weights must not all be zero");
  auto rng = make_rng(seed, {tag(Stream::kSecurity)});
  for (auto& c : pop.clients) {
    const double u = uniform01(rng) * total;
    double acc = 0;
    std::size_t level = weights.size() - 1;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc && weights[i] > 0) {
        level = i;
        break;
      }
    }
    while (weights[level] == 0) --level;  // u landed on the float edge
    c.security_req = kSecurityLevels[level];
  }
  return pop;
}

Population assign_dirichlet_sizes(Population pop, std::uint64_t total_samples, double alpha,
                                  std::uint64_t seed) {
  if (!(alpha > 0)) throw InputError("Dirichlet concentration must be positive");
  auto rng = make_rng(seed, {tag(Stream::kDataPartition)});
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> w(pop.size());
  for (auto& x : w) x = gamma(rng);
  const double sum = std::accumulate(w.begin(), w.end(), 0.0);
  for (std::size_t i = 0; i < pop.size(); ++i) {
    const double share = sum > 0 ? w[i] / sum : 1.0 / pop.size();
    pop.clients[i].data_size =
        std::max<std::uint64_t>(1, std::llround(share * static_cast<double>(total_samples)));
  }
  return pop;
}

Population assign_equal_sizes(Population pop, std::uint64_t samples_per_client) {
  for (auto& c : pop.clients) c.data_size = std::max<std::uint64_t>(1, samples_per_client);
  return pop;
}

LatencyBreakdown latency_breakdown(const ClientProfile& client, const ParameterPlan& plan,
                                   const CostModel& model, std::uint64_t n_params) {
  LatencyBreakdown b;
  b.training = client.base_train_time / client.compute_speed;
  b.he = he_latency(plan, model, client.compute_speed, n_params);
  b.communication = static_cast<double>(ciphertext_bytes(plan, n_params)) / client.bandwidth;
  return b;
}

double estimate_round_latency(const ClientProfile& client, const ParameterPlan& plan,
                              const CostModel& model, std::uint64_t n_params) {
  return latency_breakdown(client, plan, model, n_params).total();
}

nlohmann::json to_json(const ClientProfile& c) {
  return {{"id", c.id},
          {"compute_speed", c.compute_speed},
          {"bandwidth_bps", c.bandwidth},
          {"data_size", c.data_size},
          {"security_req", c.security_req},
          {"base_train_time_s", c.base_train_time}};
}

nlohmann::json to_json(const Population& pop) {
  nlohmann::json clients = nlohmann::json::array();
  for (const auto& c : pop.clients) clients.push_back(to_json(c));
  return {{"seed", pop.seed}, {"clients", std::move(clients)}};
}

}  // namespace hefl
