/*
 * Copyright 2026 The ranksafe authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "ranksafe/click_sim.h"

#include <cmath>
#include <filesystem>
#include <map>

#include "doctest.h"
#include "ranksafe/errors.h"
#include "ranksafe/rng.h"

using namespace ranksafe;

namespace {

// One query per grade so every (rank, grade) rate is observable.
std::vector<Query> GradedQueries() {
  std::vector<Query> queries;
  Query query;
  query.query_id = 1;
  for (int grade = 0; grade <= 4; ++grade) {
    query.documents.push_back(Document{grade, {0.0}, grade});
  }
  queries.push_back(query);
  return queries;
}

}  // namespace

TEST_CASE("click probabilities for the three user models") {
  const BiasParams bias = BiasParams::Default();

  CHECK(ClickProbability(ClickModelKind::kPosition, bias, 1, 1.0) ==
        doctest::Approx(0.35).epsilon(1e-15));
  CHECK(ClickProbability(ClickModelKind::kTrust, bias, 2, 0.5) ==
        doctest::Approx(0.525).epsilon(1e-15));
  CHECK(ClickProbability(ClickModelKind::kAdversarial, bias, 1, 1.0) ==
        doctest::Approx(0.0).epsilon(1e-15));

  SUBCASE("ranks beyond the display cutoff are rejected") {
    CHECK_THROWS_AS(ClickProbability(ClickModelKind::kTrust, bias, 6, 0.5),
                    ArgumentError);
    CHECK_THROWS_AS(ClickProbability(ClickModelKind::kTrust, bias, 0, 0.5),
                    ArgumentError);
  }

  SUBCASE("adversarial clicks complement trust clicks exactly") {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
      const int rank = 1 + static_cast<int>(rng.NextBelow(5));
      const double rel = rng.NextDouble();
      const double trust = ClickProbability(ClickModelKind::kTrust, bias, rank, rel);
      const double adversarial =
          ClickProbability(ClickModelKind::kAdversarial, bias, rank, rel);
      CHECK(trust + adversarial == 1.0);
    }
  }
}

TEST_CASE("bias parameter validation") {
  CHECK_THROWS_AS(ValidateBias(BiasParams{{0.5}, {0.6}}), ArgumentError);
  CHECK_THROWS_AS(ValidateBias(BiasParams{{-0.1}, {0.0}}), ArgumentError);
  CHECK_THROWS_AS(ValidateBias(BiasParams{{0.5, 0.5}, {0.1}}), ArgumentError);
  CHECK_NOTHROW(ValidateBias(BiasParams::Default()));
}

TEST_CASE("simulation draws Bernoulli clicks at the displayed ranks") {
  const std::vector<Query> queries = GradedQueries();
  const PolicyParams logging{{0.0}, 1.0};  // uniform over the five docs
  const BiasParams bias = BiasParams::Default();

  SUBCASE("zero examination yields zero clicks") {
    const BiasParams dead{{0.0, 0.0}, {0.0, 0.0}};
    const ClickLog log =
        Simulate(logging, queries, ClickModelKind::kPosition, dead, 2, 500, 5);
    for (const ClickLogEntry& entry : log.entries) {
      for (const auto click : entry.clicks) CHECK(click == 0);
    }
  }

  SUBCASE("an irrelevant doc at rank one clicks at the trust offset") {
    // Deterministically present the grade-0 document first.
    std::vector<Query> single;
    Query query;
    query.query_id = 1;
    query.documents = {Document{0, {1.0}, 0}};
    single.push_back(query);
    const ClickLog log = Simulate({{0.0}, 1.0}, single, ClickModelKind::kTrust,
                                  bias, 1, 10000, 5);
    long clicks = 0;
    for (const ClickLogEntry& entry : log.entries) clicks += entry.clicks[0];
    const double rate = clicks / 10000.0;
    const double se = std::sqrt(0.65 * 0.35 / 10000.0);
    CHECK(std::abs(rate - 0.65) < 3 * se);
  }

  SUBCASE("equal master seeds agree bitwise, different seeds differ") {
    const ClickLog a =
        Simulate(logging, queries, ClickModelKind::kTrust, bias, 5, 300, 17);
    const ClickLog b =
        Simulate(logging, queries, ClickModelKind::kTrust, bias, 5, 300, 17);
    const ClickLog c =
        Simulate(logging, queries, ClickModelKind::kTrust, bias, 5, 300, 18);
    REQUIRE(a.N() == b.N());
    bool identical = true;
    for (long i = 0; i < a.N(); ++i) {
      identical = identical &&
                  a.entries[static_cast<size_t>(i)].presented.positions ==
                      b.entries[static_cast<size_t>(i)].presented.positions &&
                  a.entries[static_cast<size_t>(i)].clicks ==
                      b.entries[static_cast<size_t>(i)].clicks;
    }
    CHECK(identical);
    bool differs = false;
    for (long i = 0; i < a.N() && !differs; ++i) {
      differs = a.entries[static_cast<size_t>(i)].presented.positions !=
                    c.entries[static_cast<size_t>(i)].presented.positions ||
                a.entries[static_cast<size_t>(i)].clicks !=
                    c.entries[static_cast<size_t>(i)].clicks;
    }
    CHECK(differs);
  }

  SUBCASE("per rank and grade click rates match the analytic model") {
    for (const ClickModelKind kind :
         {ClickModelKind::kPosition, ClickModelKind::kTrust,
          ClickModelKind::kAdversarial}) {
      const long n = 40000;
      const ClickLog log = Simulate(logging, queries, kind, bias, 5, n, 23);
      std::map<std::pair<int, int>, std::pair<long, long>> buckets;  // (rank, grade)
      for (const ClickLogEntry& entry : log.entries) {
        for (size_t j = 0; j < entry.presented.positions.size(); ++j) {
          // doc_id doubles as the grade in GradedQueries().
          auto& bucket = buckets[{static_cast<int>(j) + 1,
                                  entry.presented.positions[j]}];
          ++bucket.first;
          bucket.second += entry.clicks[j];
        }
      }
      for (const auto& [key, observed] : buckets) {
        const auto [impressions, clicks] = observed;
        if (impressions < 1000) continue;
        const double expected = ClickProbability(
            kind, bias, key.first, RelevanceProbability(key.second));
        const double rate = clicks / static_cast<double>(impressions);
        const double se = std::sqrt(
            std::max(expected * (1 - expected), 1e-12) / static_cast<double>(impressions));
        CHECK(std::abs(rate - expected) < 3 * se + 1e-9);
      }
    }
  }
}

TEST_CASE("click logs round trip through the text format") {
  const std::vector<Query> queries = GradedQueries();
  const ClickLog log = Simulate({{0.0}, 1.0}, queries, ClickModelKind::kAdversarial,
                                BiasParams::Default(), 3, 50, 41);
  const std::string path =
      (std::filesystem::temp_directory_path() / "ranksafe_clicklog_test.txt").string();
  SaveClickLog(log, path);
  const ClickLog loaded = LoadClickLog(path);
  CHECK(loaded.model == log.model);
  CHECK(loaded.k == log.k);
  REQUIRE(loaded.N() == log.N());
  for (long i = 0; i < log.N(); ++i) {
    CHECK(loaded.entries[static_cast<size_t>(i)].query_id ==
          log.entries[static_cast<size_t>(i)].query_id);
    CHECK(loaded.entries[static_cast<size_t>(i)].presented.positions ==
          log.entries[static_cast<size_t>(i)].presented.positions);
    CHECK(loaded.entries[static_cast<size_t>(i)].clicks ==
          log.entries[static_cast<size_t>(i)].clicks);
  }
  std::filesystem::remove(path);
}
