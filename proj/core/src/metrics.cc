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

#include "ranksafe/metrics.h"

#include <algorithm>
#include <cmath>

#include "ranksafe/errors.h"
#include "ranksafe/rng.h"

namespace ranksafe {
namespace {

constexpr uint64_t kNdcgStream = 0x6e646367;
constexpr uint64_t kUtilityStream = 0x7574696c;

double Gain(int grade, bool exponential) {
  return exponential ? std::pow(2.0, grade) - 1.0 : static_cast<double>(grade);
}

// Derives an independent per-query evaluation stream so that metric values
// do not depend on query iteration order.
EvalMode PerQueryMode(const EvalMode& mode, uint64_t stream, int query_id) {
  EvalMode per_query = mode;
  if (!mode.exact) {
    per_query.seed = DeriveSeed(mode.seed, {stream, static_cast<uint64_t>(query_id)});
  }
  return per_query;
}

}  // namespace

RankWeightFn ExposureWeight(const BiasParams& bias, int k) {
  if (k < 1 || k > bias.K()) {
    throw ArgumentError("k must lie in [1, K] with K = " + std::to_string(bias.K()));
  }
  std::vector<double> weights(bias.alpha);
  for (size_t i = 0; i < weights.size(); ++i) weights[i] += bias.beta[i];
  return [weights, k](int rank) {
    return rank >= 1 && rank <= k ? weights[static_cast<size_t>(rank - 1)] : 0.0;
  };
}

RankWeightFn ExaminationWeight(const BiasParams& bias, int k) {
  if (k < 1 || k > bias.K()) {
    throw ArgumentError("k must lie in [1, K] with K = " + std::to_string(bias.K()));
  }
  std::vector<double> weights(bias.alpha);
  return [weights, k](int rank) {
    return rank >= 1 && rank <= k ? weights[static_cast<size_t>(rank - 1)] : 0.0;
  };
}

double NdcgAtK(const PolicyParams& policy, const std::vector<Query>& queries,
               int k, const EvalMode& mode, bool exponential_gain) {
  const RankWeightFn discount = DcgWeight(k);
  double total = 0.0;
  long counted = 0;
  for (const Query& query : queries) {
    std::vector<double> gains;
    gains.reserve(query.documents.size());
    bool any_gain = false;
    for (const Document& doc : query.documents) {
      gains.push_back(Gain(doc.relevance_grade, exponential_gain));
      any_gain = any_gain || doc.relevance_grade > 0;
    }
    if (!any_gain) continue;  // NDCG undefined for an all-zero query

    std::vector<double> ideal(gains);
    std::sort(ideal.begin(), ideal.end(), std::greater<double>());
    double idcg = 0.0;
    for (int j = 0; j < std::min<int>(k, static_cast<int>(ideal.size())); ++j) {
      idcg += ideal[static_cast<size_t>(j)] * discount(j + 1);
    }

    // E[DCG] = sum_d gain(d) * E[discount(rank(d))].
    const std::vector<double> omega = ExpectedMetricWeights(
        policy, query, discount, k, PerQueryMode(mode, kNdcgStream, query.query_id));
    double dcg = 0.0;
    for (size_t i = 0; i < gains.size(); ++i) dcg += gains[i] * omega[i];

    total += dcg / idcg;
    ++counted;
  }
  if (counted == 0) {
    throw ArgumentError("NDCG undefined: every query has all-zero grades");
  }
  return total / static_cast<double>(counted);
}

double TrueUtility(const PolicyParams& policy, const std::vector<Query>& queries,
                   const RankWeightFn& weight_fn, int k, const EvalMode& mode) {
  if (queries.empty()) throw ArgumentError("need at least one query");
  double total = 0.0;
  for (const Query& query : queries) {
    const std::vector<double> omega = ExpectedMetricWeights(
        policy, query, weight_fn, k, PerQueryMode(mode, kUtilityStream, query.query_id));
    for (size_t i = 0; i < query.documents.size(); ++i) {
      total += omega[i] * RelevanceProbability(query.documents[i].relevance_grade);
    }
  }
  return total / static_cast<double>(queries.size());
}

}  // namespace ranksafe
