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

#include "ranksafe/dataset.h"
#include "ranksafe/policy.h"
#include "ranksafe/rng.h"

namespace {

using namespace ranksafe;

Query MakeQuery(int docs, int dim) {
  Rng rng(17);
  Query query;
  query.query_id = 1;
  for (int d = 0; d < docs; ++d) {
    Document doc;
    doc.doc_id = d;
    doc.features.resize(static_cast<size_t>(dim));
    for (double& f : doc.features) f = rng.NextGaussian();
    query.documents.push_back(std::move(doc));
  }
  return query;
}

PolicyParams MakePolicy(int dim) {
  Rng rng(19);
  PolicyParams params;
  params.weights.resize(static_cast<size_t>(dim));
  for (double& w : params.weights) w = 0.5 * rng.NextGaussian();
  return params;
}

void BM_SampleRanking(benchmark::State& state) {
  const Query query = MakeQuery(static_cast<int>(state.range(0)), 8);
  const PolicyParams params = MakePolicy(8);
  Rng rng(23);
  for (auto _ : state) {
    benchmark::DoNotOptimize(SampleRanking(params, query, 5, rng));
  }
}
BENCHMARK(BM_SampleRanking)->Arg(10)->Arg(50)->Arg(200);

void BM_GradLogProb(benchmark::State& state) {
  const Query query = MakeQuery(static_cast<int>(state.range(0)), 8);
  const PolicyParams params = MakePolicy(8);
  Rng rng(29);
  const RankedList ranking = SampleRanking(params, query, 5, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(GradLogProb(params, query, ranking));
  }
}
BENCHMARK(BM_GradLogProb)->Arg(10)->Arg(50);

void BM_ExpectedWeightsExact(benchmark::State& state) {
  const Query query = MakeQuery(static_cast<int>(state.range(0)), 8);
  const PolicyParams params = MakePolicy(8);
  const RankWeightFn dcg = DcgWeight(3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        ExpectedMetricWeights(params, query, dcg, 3, EvalMode::Exact(100000)));
  }
}
BENCHMARK(BM_ExpectedWeightsExact)->Arg(6)->Arg(8);

void BM_ExpectedWeightsSampled(benchmark::State& state) {
  const Query query = MakeQuery(20, 8);
  const PolicyParams params = MakePolicy(8);
  const RankWeightFn dcg = DcgWeight(5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ExpectedMetricWeights(
        params, query, dcg, 5,
        EvalMode::Sampled(static_cast<int>(state.range(0)), 31)));
  }
}
BENCHMARK(BM_ExpectedWeightsSampled)->Arg(100)->Arg(1000);

}  // namespace
