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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "hefl/client_profile.hpp"
#include "hefl/error.hpp"

using namespace hefl;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& text) {
  const auto dir = fs::temp_directory_path() / "hefl_client_tests";
  fs::create_directories(dir);
  const auto path = dir / name;
  std::ofstream(path) << text;
  return path;
}

std::string numbered_trace(int rows) {
  std::string s = "compute_speed,bandwidth_bps,base_train_time_s\n";
  for (int i = 1; i <= rows; ++i) s += std::to_string(i) + ",1000," + std::to_string(i) + "\n";
  return s;
}

ClientProfile client(double speed, double bw, double train) {
  ClientProfile c;
  c.compute_speed = speed;
  c.bandwidth = bw;
  c.base_train_time = train;
  return c;
}

}  // namespace

TEST_CASE("full trace gives one profile per row in file order") {
  const auto path = write_temp("full.csv", numbered_trace(1000));
  const auto pop = load_traces(path, 1000, 3);
  REQUIRE(pop.size() == 1000);
  for (ClientId i = 0; i < 1000; ++i) {
    CHECK(pop[i].id == i);
    CHECK(pop[i].compute_speed == i + 1);
  }
}

TEST_CASE("subset draws distinct rows; short trace samples with replacement") {
  const auto path = write_temp("ten.csv", numbered_trace(10));
  const auto sub = load_traces(path, 6, 9);
  std::set<double> speeds;
  for (const auto& c : sub.clients) speeds.insert(c.compute_speed);
  CHECK(speeds.size() == 6);

  const auto big = load_traces(path, 50, 9);
  CHECK(big.size() == 50);
  for (const auto& c : big.clients) CHECK((c.compute_speed >= 1 && c.compute_speed <= 10));
  CHECK(load_traces(path, 50, 9).clients[17].compute_speed == big.clients[17].compute_speed);
}

TEST_CASE("columns may appear in any order") {
  const auto path =
      write_temp("order.csv", "base_train_time_s,compute_speed,bandwidth_bps\n7,2,500\n");
  const auto pop = load_traces(path, 1, 0);
  CHECK(pop[0].compute_speed == 2);
  CHECK(pop[0].bandwidth == 500);
  CHECK(pop[0].base_train_time == 7);
}

TEST_CASE("trace errors") {
  const auto bad = write_temp("bad.csv", "compute_speed,bandwidth_bps,base_train_time_s\n1,2,3\n1,x,3\n");
  try {
    load_traces(bad, 2, 0);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(load_traces(write_temp("empty.csv", ""), 1, 0), InputError);
  CHECK_THROWS_AS(load_traces(write_temp("hdr.csv", "compute_speed,bandwidth_bps,base_train_time_s\n"), 1, 0),
                  InputError);
  CHECK_THROWS_AS(load_traces(bad.parent_path() / "missing.csv", 1, 0), InputError);
  const auto neg = write_temp("neg.csv", "compute_speed,bandwidth_bps,base_train_time_s\n-1,2,3\n");
  CHECK_THROWS_AS(load_traces(neg, 1, 0), ParseError);
}

TEST_CASE("security assignment") {
  Population pop;
  for (ClientId i = 0; i < 3000; ++i) {
    auto c = client(1, 1, 1);
    c.id = i;
    pop.clients.push_back(c);
  }
  const auto all128 = assign_security(pop, {1, 0, 0}, 1);
  for (const auto& c : all128.clients) CHECK(c.security_req == 128);

  // Binomial sd is ~25.8, so +-50 (5%) holds for ~87% of seeds and 4 sd always.
  int within_five_percent = 0;
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const auto uniform = assign_security(pop, {1, 1, 1}, seed);
    int counts[3] = {0, 0, 0};
    for (const auto& c : uniform.clients) counts[security_level_index(c.security_req)]++;
    bool ok = true;
    for (int n : counts) {
      CHECK(std::abs(n - 1000) <= 104);
      ok = ok && std::abs(n - 1000) <= 50;
    }
    within_five_percent += ok;
  }
  CHECK(within_five_percent >= 28);

  CHECK_THROWS_AS(assign_security(pop, {0, 0, 0}, 1), InputError);
  CHECK_THROWS_AS(assign_security(pop, {1, -1, 0}, 1), InputError);
}

TEST_CASE("data sizes") {
  Population pop;
  for (ClientId i = 0; i < 100; ++i) {
    auto c = client(1, 1, 1);
    c.id = i;
    pop.clients.push_back(c);
  }
  const auto d = assign_dirichlet_sizes(pop, 50000, 0.5, 4);
  std::uint64_t total = 0;
  for (const auto& c : d.clients) {
    CHECK(c.data_size >= 1);
    total += c.data_size;
  }
  CHECK(std::abs(static_cast<double>(total) - 50000.0) < 200.0);
  CHECK(assign_dirichlet_sizes(pop, 50000, 0.5, 4).clients[42].data_size == d.clients[42].data_size);
  CHECK_THROWS_AS(assign_dirichlet_sizes(pop, 50000, 0.0, 4), InputError);
  for (const auto& c : assign_equal_sizes(pop, 77).clients) CHECK(c.data_size == 77);
}

TEST_CASE("round latency") {
  const CostModel m;
  const ParameterPlan p{13, 100};
  const auto c = client(1.0, 1e6, 5.0);
  const auto b = latency_breakdown(c, p, m, 10000);
  CHECK(b.training == 5.0);
  CHECK(b.he == doctest::Approx(he_latency(p, m, 1.0, 10000)));
  CHECK(b.communication == doctest::Approx(614400.0 / 1e6));
  CHECK(estimate_round_latency(c, p, m, 10000) == doctest::Approx(b.total()));
  CHECK(b.training >= 0);
  CHECK(b.he >= 0);
  CHECK(b.communication >= 0);

  const auto inf = client(1.0, 1e300, 5.0);
  CHECK(estimate_round_latency(inf, p, m, 10000) ==
        doctest::Approx(5.0 + he_latency(p, m, 1.0, 10000)));

  const auto slow = client(0.5, 1e6, 5.0);
  CHECK(estimate_round_latency(slow, p, m, 10000) > estimate_round_latency(c, p, m, 10000));
  CHECK(estimate_round_latency(c, {13, 101}, m, 10000) > estimate_round_latency(c, p, m, 10000));
  CHECK(estimate_round_latency(c, {14, 100}, m, 10000) > estimate_round_latency(c, p, m, 10000));
}

TEST_CASE("population validation and json") {
  Population pop;
  pop.clients.push_back(client(1, 1, 1));
  CHECK_NOTHROW(pop.validate());
  pop.clients[0].security_req = 100;
  CHECK_THROWS_AS(pop.validate(), InputError);
  pop.clients[0].security_req = 192;
  pop.clients.push_back(client(1, 1, 1));  // id 0 again
  CHECK_THROWS_AS(pop.validate(), InputError);
  CHECK_THROWS_AS(Population{}.validate(), InputError);
  pop.clients.pop_back();
  const auto j = to_json(pop);
  CHECK(j["clients"][0]["security_req"] == 192);
}
