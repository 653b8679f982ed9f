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

#include "ranksafe/logging_stats.h"

#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "ranksafe/errors.h"
#include "ranksafe/rng.h"
#include "support/oracles.h"

using namespace ranksafe;

TEST_CASE("logging statistics in exact mode") {
  const BiasParams bias = BiasParams::Default();

  SUBCASE("a document pinned to rank one") {
    std::vector<Query> queries(1);
    queries[0].query_id = 1;
    queries[0].documents = {Document{0, {1.0}, 0}};
    const LoggingStats stats =
        EstimateLoggingStats({{0.0}, 1.0}, queries, bias, 5, EvalMode::Exact());
    const QueryLoggingStats& qs = stats.at(1);
    CHECK(qs.rho0[0] == doctest::Approx(0.35).epsilon(1e-12));
    CHECK(qs.omega0[0] == doctest::Approx(1.00).epsilon(1e-12));
    CHECK(qs.beta0[0] == doctest::Approx(0.65).epsilon(1e-12));
  }

  SUBCASE("a document that never enters the top ranks has zero exposure") {
    std::vector<Query> queries(1);
    queries[0].query_id = 1;
    queries[0].documents = {Document{0, {50.0}, 0}, Document{1, {0.0}, 0}};
    const LoggingStats stats =
        EstimateLoggingStats({{1.0}, 0.01}, queries, bias, 1, EvalMode::Exact());
    const QueryLoggingStats& qs = stats.at(1);
    CHECK(qs.rho0[1] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(qs.omega0[1] == doctest::Approx(0.0).epsilon(1e-12));
  }

  SUBCASE("a uniform policy over two docs averages the first two ranks") {
    std::vector<Query> queries(1);
    queries[0].query_id = 1;
    queries[0].documents = {Document{0, {0.0}, 0}, Document{1, {0.0}, 0}};
    const LoggingStats stats =
        EstimateLoggingStats({{0.0}, 1.0}, queries, bias, 2, EvalMode::Exact());
    const QueryLoggingStats& qs = stats.at(1);
    CHECK(qs.rho0[0] == doctest::Approx(0.44).epsilon(1e-12));
    CHECK(qs.rho0[1] == doctest::Approx(0.44).epsilon(1e-12));
  }
}

TEST_CASE("sampled statistics converge to the exact values") {
  const BiasParams bias = BiasParams::Default();
  Rng rng(47);
  for (int trial = 0; trial < 10; ++trial) {
    const auto instance = testing::RandomInstance(rng, 5, 3);
    const int k = std::min<int>(3, static_cast<int>(instance.query.documents.size()));
    const std::vector<Query> queries{instance.query};
    const LoggingStats exact =
        EstimateLoggingStats(instance.logging, queries, bias, k, EvalMode::Exact());
    const int m = 20000;
    const LoggingStats sampled = EstimateLoggingStats(
        instance.logging, queries, bias, k, EvalMode::Sampled(m, rng.NextU64()));
    const QueryLoggingStats& qe = exact.at(instance.query.query_id);
    const QueryLoggingStats& qs = sampled.at(instance.query.query_id);
    for (size_t i = 0; i < qe.rho0.size(); ++i) {
      // alpha at the displayed rank is bounded by max alpha, so the
      // per-document variance is at most max_alpha^2 / 4.
      const double se = 0.55 / 2.0 / std::sqrt(static_cast<double>(m));
      CHECK(std::abs(qs.rho0[i] - qe.rho0[i]) < 3 * se + 1e-9);
      CHECK(std::abs(qs.omega0[i] - qe.omega0[i]) < 3 * 0.5 / std::sqrt(m) + 1e-9);
    }
  }
}

TEST_CASE("the trust offset equals the expected beta at the displayed rank") {
  const BiasParams bias = BiasParams::Default();
  Rng rng(53);
  for (int trial = 0; trial < 10; ++trial) {
    const auto instance = testing::RandomInstance(rng, 5, 3);
    const int k = std::min<int>(3, static_cast<int>(instance.query.documents.size()));
    const LoggingStats stats = EstimateLoggingStats(
        instance.logging, {instance.query}, bias, k, EvalMode::Exact());
    const QueryLoggingStats& qs = stats.at(instance.query.query_id);
    // Independent route: accumulate beta over the enumerated rankings.
    std::vector<double> expected_beta(instance.query.documents.size(), 0.0);
    for (const auto& [ranking, prob] :
         EnumerateRankings(instance.logging, instance.query, k)) {
      for (size_t j = 0; j < ranking.positions.size(); ++j) {
        for (size_t i = 0; i < instance.query.documents.size(); ++i) {
          if (instance.query.documents[i].doc_id == ranking.positions[j]) {
            expected_beta[i] += prob * bias.beta[j];
            break;
          }
        }
      }
    }
    for (size_t i = 0; i < expected_beta.size(); ++i) {
      CHECK(qs.beta0[i] == doctest::Approx(expected_beta[i]).epsilon(1e-12));
      CHECK(qs.omega0[i] - qs.rho0[i] ==
            doctest::Approx(expected_beta[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("propensity clipping") {
  LoggingStats stats;
  QueryLoggingStats qs;
  qs.doc_ids = {0, 1, 2};
  qs.rho0 = {0.0, 0.5, 0.05};
  qs.omega0 = {0.0, 0.7, 0.1};
  qs.beta0 = {0.0, 0.2, 0.05};
  stats.by_query.emplace(1, qs);

  SUBCASE("rho is floored at 10 over root N, omega untouched") {
    const LoggingStats clipped = ClipPropensities(stats, 10000);
    const QueryLoggingStats& c = clipped.at(1);
    CHECK(c.rho0[0] == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(c.rho0[1] == 0.5);
    CHECK(c.rho0[2] == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(c.omega0[0] == 0.0);
    CHECK(c.omega0[1] == 0.7);
    CHECK(c.beta0 == qs.beta0);
  }

  SUBCASE("clipping is idempotent and bounded below") {
    const LoggingStats once = ClipPropensities(stats, 400);
    const LoggingStats twice = ClipPropensities(once, 400);
    const double floor = PropensityClipThreshold(400);
    for (const auto& [qid, q] : twice.by_query) {
      for (size_t i = 0; i < q.rho0.size(); ++i) {
        CHECK(q.rho0[i] == once.at(qid).rho0[i]);
        CHECK(q.rho0[i] >= floor);
      }
    }
  }

  SUBCASE("clipping is monotone in the inputs") {
    LoggingStats bigger = stats;
    for (auto& [qid, q] : bigger.by_query) {
      for (double& rho : q.rho0) rho += 0.07;
    }
    const LoggingStats a = ClipPropensities(stats, 2500);
    const LoggingStats b = ClipPropensities(bigger, 2500);
    for (const auto& [qid, q] : a.by_query) {
      for (size_t i = 0; i < q.rho0.size(); ++i) {
        CHECK(b.at(qid).rho0[i] >= q.rho0[i]);
      }
    }
  }

  SUBCASE("invalid N is rejected") {
    CHECK_THROWS_AS(ClipPropensities(stats, 0), ArgumentError);
  }
}

TEST_CASE("statistics tables round trip") {
  const BiasParams bias = BiasParams::Default();
  Rng rng(59);
  const auto instance = testing::RandomInstance(rng, 5, 3);
  const LoggingStats stats = EstimateLoggingStats(
      instance.logging, {instance.query}, bias, 3, EvalMode::Sampled(500, 7));
  const std::string path =
      (std::filesystem::temp_directory_path() / "ranksafe_stats_test.txt").string();
  SaveLoggingStats(stats, path);
  const LoggingStats loaded = LoadLoggingStats(path);
  const QueryLoggingStats& a = stats.at(instance.query.query_id);
  const QueryLoggingStats& b = loaded.at(instance.query.query_id);
  CHECK(a.doc_ids == b.doc_ids);
  CHECK(a.rho0 == b.rho0);
  CHECK(a.omega0 == b.omega0);
  CHECK(a.samples == b.samples);
  for (size_t i = 0; i < a.beta0.size(); ++i) {
    CHECK(b.beta0[i] == doctest::Approx(a.beta0[i]).epsilon(1e-15));
  }
  std::filesystem::remove(path);
}
