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

// Plackett-Luce ranking policy over a linear scorer: top-k sampling, exact
// log-probabilities and score-function gradients, a brute-force enumeration
// oracle for small instances, and expected per-document metric weights.

#ifndef RANKSAFE_POLICY_H_
#define RANKSAFE_POLICY_H_

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ranksafe/dataset.h"
#include "ranksafe/rng.h"

namespace ranksafe {

// Linear Plackett-Luce model: per-document logits are
// (weights . features) / temperature. High temperature flattens the
// ranking distribution toward uniform; this is how a deterministic-ish
// production ranker becomes a stochastic logging policy.
struct PolicyParams {
  std::vector<double> weights;
  double temperature = 1.0;
};

// A displayed top-k list: doc_ids, best rank first.
struct RankedList {
  int query_id = 0;
  std::vector<int> positions;
};

// Per-rank metric weight, 1-based display rank. Implementations must
// return 0 beyond their cutoff.
using RankWeightFn = std::function<double(int rank)>;

// DCG discount 1 / log2(rank + 1) up to rank k, 0 beyond.
RankWeightFn DcgWeight(int k);

// Exact-computation budget: instances with more than this many
// k-permutations are refused by the enumeration paths.
inline constexpr long kDefaultEnumerationCap = 10080;

long CountRankings(int num_docs, int k, long cap);  // -1 if above cap

// Per-document logits for the query. Throws ArgumentError on a feature
// dimensionality mismatch.
std::vector<double> Score(const PolicyParams& params, const Query& query);

// Sequential softmax sampling without replacement; the resulting list of
// length min(k, #docs) is distributed by the Plackett-Luce law.
RankedList SampleRanking(const PolicyParams& params, const Query& query, int k,
                         Rng& rng);

// Deterministic ranking by descending score, ties by ascending doc_id.
RankedList RankByScore(const PolicyParams& params, const Query& query, int k);

// log P(ranking | params, query) under the PL factorization.
double RankingLogProb(const PolicyParams& params, const Query& query,
                      const RankedList& ranking);

// d/dweights of RankingLogProb; the exact PL score-function gradient.
std::vector<double> GradLogProb(const PolicyParams& params, const Query& query,
                                const RankedList& ranking);

// All min(k, #docs)-permutations with exact probabilities. Throws SizeError
// above the cap.
std::vector<std::pair<RankedList, double>> EnumerateRankings(
    const PolicyParams& params, const Query& query, int k,
    long cap = kDefaultEnumerationCap);

// How expectations over rankings are computed.
struct EvalMode {
  bool exact = true;
  long cap = kDefaultEnumerationCap;
  int samples = 0;
  uint64_t seed = 0;

  static EvalMode Exact(long cap = kDefaultEnumerationCap) {
    EvalMode m;
    m.exact = true;
    m.cap = cap;
    return m;
  }
  static EvalMode Sampled(int samples, uint64_t seed) {
    EvalMode m;
    m.exact = false;
    m.samples = samples;
    m.seed = seed;
    return m;
  }
};

// omega(d | query, params) = E_y[ weight_fn(rank(d | y)) ] per document,
// 0 weight for documents outside the top-k. Exact mode enumerates rank
// prefixes (the weight of a document is fixed once it is placed), sampled
// mode averages over drawn rankings.
std::vector<double> ExpectedMetricWeights(const PolicyParams& params,
                                          const Query& query,
                                          const RankWeightFn& weight_fn, int k,
                                          const EvalMode& mode);

// d/dweights of ExpectedMetricWeights via full enumeration:
// grad omega(d) = sum_y P(y) weight_fn(rank(d|y)) grad log P(y).
// Test-oriented; cost grows with the number of k-permutations.
std::vector<std::vector<double>> ExpectedMetricWeightGradients(
    const PolicyParams& params, const Query& query,
    const RankWeightFn& weight_fn, int k, long cap = kDefaultEnumerationCap);

// Score-function gradient of E_y[ sum_d coef[d] * weight_fn(rank(d|y)) ]
// with respect to the policy weights. Every counterfactual objective in
// this library reduces to returns of this per-document-linear form.
// Sampled mode optionally subtracts the mean return as a control variate
// (needs >= 2 samples); exact mode ignores the flag since the baseline
// cancels identically under full enumeration.
std::vector<double> PerDocReturnGradient(const PolicyParams& params,
                                         const Query& query,
                                         const std::vector<double>& coef,
                                         const RankWeightFn& weight_fn, int k,
                                         const EvalMode& mode,
                                         bool baseline = true);

// Lower-level pieces for objectives that need several passes over one
// batch of sampled rankings (ratio clipping, divergence penalties).
std::vector<RankedList> SampleRankings(const PolicyParams& params,
                                       const Query& query, int k, int samples,
                                       uint64_t seed);

// Per-document mean of weight_fn(rank) over the given rankings.
std::vector<double> MeanWeights(const Query& query,
                                const std::vector<RankedList>& rankings,
                                const RankWeightFn& weight_fn);

// (1/S) sum_s (G_s - baseline) grad log P(y_s) over the given rankings,
// with G_s = sum_d coef[d] * weight_fn(rank(d | y_s)) and the baseline the
// mean return when enabled.
std::vector<double> ReturnGradientFromRankings(
    const PolicyParams& params, const Query& query,
    const std::vector<RankedList>& rankings, const std::vector<double>& coef,
    const RankWeightFn& weight_fn, bool baseline);

// Flat text serialization with a (dim, temperature) header.
void SavePolicy(const PolicyParams& params, const std::string& path);
PolicyParams LoadPolicy(const std::string& path);

// FNV-1a over the parameter bytes; cache key for per-policy statistics.
uint64_t HashPolicy(const PolicyParams& params);

}  // namespace ranksafe

#endif  // RANKSAFE_POLICY_H_
