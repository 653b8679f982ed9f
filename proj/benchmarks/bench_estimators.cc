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

#include <benchmark/benchmark.h>

#include "ranksafe/click_sim.h"
#include "ranksafe/dataset.h"
#include "ranksafe/estimators.h"
#include "ranksafe/logging_stats.h"
#include "ranksafe/metrics.h"

namespace {

using namespace ranksafe;

struct Fixture {
  Dataset dataset = GenerateSynthetic(200, 10, 8, 7);
  QueryIndex index{dataset.train};
  BiasParams bias = BiasParams::Default();
  PolicyParams logging{std::vector<double>(8, 0.1), 1.0};
  LoggingStats stats = EstimateLoggingStats(logging, dataset.train, bias, 5,
                                            EvalMode::Sampled(500, 3));
};

const Fixture& Shared() {
  static const Fixture fixture;
  return fixture;
}

void BM_Simulate(benchmark::State& state) {
  const Fixture& fx = Shared();
  for (auto _ : state) {
    benchmark::DoNotOptimize(Simulate(fx.logging, fx.dataset.train,
                                      ClickModelKind::kTrust, fx.bias, 5,
                                      state.range(0), 11));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Simulate)->Arg(1000)->Arg(100000);

void BM_AggregateTrustLog(benchmark::State& state) {
  const Fixture& fx = Shared();
  const ClickLog log = Simulate(fx.logging, fx.dataset.train,
                                ClickModelKind::kTrust, fx.bias, 5,
                                state.range(0), 11);
  const LoggingStats clipped = ClipPropensities(fx.stats, log.N());
  for (auto _ : state) {
    benchmark::DoNotOptimize(AggregateEstimatorTerms(
        EstimatorKind::kIpsAffine, log, fx.index, clipped, nullptr, nullptr,
        PropensityClipThreshold(log.N())));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_AggregateTrustLog)->Arg(10000)->Arg(100000);

void BM_AffineEstimate(benchmark::State& state) {
  const Fixture& fx = Shared();
  const ClickLog log = Simulate(fx.logging, fx.dataset.train,
                                ClickModelKind::kTrust, fx.bias, 5, 20000, 11);
  const LoggingStats clipped = ClipPropensities(fx.stats, log.N());
  const PolicyParams policy{std::vector<double>(8, -0.05), 1.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        IpsAffineEstimate(policy, log, fx.index, clipped, ExposureWeight(fx.bias, 5),
                          5, EvalMode::Sampled(static_cast<int>(state.range(0)), 13)));
  }
}
BENCHMARK(BM_AffineEstimate)->Arg(64)->Arg(256);

}  // namespace
