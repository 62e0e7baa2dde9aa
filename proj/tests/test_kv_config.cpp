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

#include <stdexcept>

#include "doctest.h"
#include "hefl/error.hpp"
#include "hefl/kv_config.hpp"

using namespace hefl;

TEST_CASE("sections, comments and line numbers") {
  const auto doc = KvDocument::parse(
      "# header\n"
      "top = 1\n"
      "\n"
      "[run]\n"
      "rounds = 100   # trailing\n"
      "; other comment style\n"
      "seeds = 1, 2,3\n"
      "[he]\n"
      "path = a#b\n",
      "t.conf");
  CHECK(doc.has_section(""));
  CHECK(doc.has_section("run"));
  CHECK_FALSE(doc.has_section("missing"));
  REQUIRE(doc.find("run", "rounds"));
  CHECK(doc.find("run", "rounds")->value == "100");
  CHECK(doc.find("run", "rounds")->line == 5);
  CHECK(doc.find("run", "seeds")->value == "1, 2,3");
  CHECK(doc.find("he", "path")->value == "a#b");
  CHECK(doc.find("run", "nope") == nullptr);
  CHECK(doc.keys("run") == std::vector<std::string>{"rounds", "seeds"});
  CHECK(doc.section_names() == std::vector<std::string>{"", "he", "run"});
}

TEST_CASE("duplicate key is a parse error naming the line") {
  try {
    KvDocument::parse("[a]\nx = 1\nx = 2\n", "dup.conf");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("dup.conf:3") != std::string::npos);
  }
}

TEST_CASE("malformed lines are rejected") {
  CHECK_THROWS_AS(KvDocument::parse("[open\n"), ParseError);
  CHECK_THROWS_AS(KvDocument::parse("no equals sign\n"), ParseError);
  CHECK_THROWS_AS(KvDocument::parse("= value\n"), ParseError);
}

TEST_CASE("empty text gives an empty document") {
  CHECK(KvDocument::parse("").empty());
  CHECK(KvDocument::parse("# only comments\n\n").empty());
}

TEST_CASE("scalar conversions") {
  CHECK(parse_double(" 1e-9 ") == doctest::Approx(1e-9));
  CHECK(parse_int("42") == 42);
  CHECK(parse_bool("true"));
  CHECK_FALSE(parse_bool("off"));
  CHECK_THROWS_AS(parse_double("1.5x"), InputError);
  CHECK_THROWS_AS(parse_double(""), InputError);
  CHECK_THROWS_AS(parse_int("3.5"), InputError);
  CHECK_THROWS_AS(parse_bool("maybe"), InputError);
}

TEST_CASE("lists") {
  CHECK(parse_int_list("13, 14,15") == std::vector<long long>{13, 14, 15});
  CHECK(parse_double_list("1, 5, 10") == std::vector<double>{1, 5, 10});
  CHECK(split_list("a, b") == std::vector<std::string>{"a", "b"});
  CHECK_THROWS_AS(split_list("a,,b"), InputError);
  CHECK(trim("  x y \t") == "x y");
}
