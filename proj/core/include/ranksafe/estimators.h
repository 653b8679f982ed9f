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

// Counterfactual utility estimators over a click log: examination-only
// inverse propensity scoring, trust-corrected (affine) IPS, and a
// doubly-robust estimator built from a per-document regression model,
// plus the ratio-times-reward decomposition consumed by the clipped
// training objective.

#ifndef RANKSAFE_ESTIMATORS_H_
#define RANKSAFE_ESTIMATORS_H_

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "ranksafe/click_sim.h"
#include "ranksafe/dataset.h"
#include "ranksafe/logging_stats.h"
#include "ranksafe/policy.h"

namespace ranksafe {

enum class EstimatorKind { kIpsPosition, kIpsAffine, kDoublyRobust };

const char* ToString(EstimatorKind kind);

// Tabular per-(query, document) relevance estimates in [0, 1];
// documents without an entry read as 0.
class RegressionModel {
 public:
  double At(int query_id, int doc_id) const;
  void Set(int query_id, int doc_id, double value);
  size_t size() const { return r_hat_.size(); }

 private:
  static int64_t Key(int query_id, int doc_id) {
    return (static_cast<int64_t>(query_id) << 32) | static_cast<uint32_t>(doc_id);
  }
  std::unordered_map<int64_t, double> r_hat_;
};

// Method-of-moments inversion of the assumed trust-bias model at the ranks
// where each document was actually shown:
//   R(d) = clamp((click_rate(d) - mean beta at d's shown ranks)
//                 / (mean alpha at d's shown ranks), 0, 1),
// with click_rate over the impressions that displayed d. Documents never
// displayed get 0.
RegressionModel FitRegression(const ClickLog& log, const QueryIndex& queries,
                              const BiasParams& assumed);

// Per-interaction estimator factors g_i(d), aggregated per logged query so
// that every estimator value is
//   sum_q sum_d omega(d | q, policy) * coef(q, d),
// with coef(q, d) = (1/N) sum_{i: q_i = q} g_i(d) and
//   position:      g = c / rho0
//   affine:        g = (c - beta0) / rho0
//   doubly robust: g = R + (c - chat_i) / rho0,
//                  chat_i(d) = alpha_{rank_i(d)} R(d) + beta_{rank_i(d)}
//                  at the rank d was displayed in interaction i (0 when
//                  d was not displayed).
// The sign-split channels drive the clipped objective, whose per-term
// rewards are omega0 * g and therefore share g's sign.
struct AggregatedLog {
  struct QueryTerms {
    int query_id = 0;
    long interactions = 0;
    std::vector<double> coef;      // (1/N) sum_i g_i(d)
    std::vector<double> coef_pos;  // (1/N) sum_i max(g_i(d), 0)
    std::vector<double> coef_neg;  // (1/N) sum_i min(g_i(d), 0)
    std::vector<double> omega0;    // logging weights floored at the given floor
  };
  std::vector<QueryTerms> queries;  // first-appearance order
  long num_interactions = 0;
};

AggregatedLog AggregateEstimatorTerms(EstimatorKind kind, const ClickLog& log,
                                      const QueryIndex& queries,
                                      const LoggingStats& stats,
                                      const RegressionModel* regression,
                                      const BiasParams* assumed,
                                      double omega0_floor);

// sum_q sum_d omega(d | q, policy) * coef(q, d); omega computed per distinct
// query in the requested mode.
double EstimateFromAggregates(const PolicyParams& policy, const AggregatedLog& agg,
                              const QueryIndex& queries, const RankWeightFn& weight_fn,
                              int k, const EvalMode& mode);

// The three public estimators. `mode` controls how the new policy's
// expected metric weights are computed. Statistics are expected to carry
// strictly positive propensities wherever a nonzero correction occurs
// (clip the training-side statistics); a zero propensity under a nonzero
// numerator raises InternalError.
double IpsPositionEstimate(const PolicyParams& policy, const ClickLog& log,
                           const QueryIndex& queries, const LoggingStats& stats,
                           const RankWeightFn& weight_fn, int k, const EvalMode& mode);

double IpsAffineEstimate(const PolicyParams& policy, const ClickLog& log,
                         const QueryIndex& queries, const LoggingStats& stats,
                         const RankWeightFn& weight_fn, int k, const EvalMode& mode);

double DoublyRobustEstimate(const PolicyParams& policy, const ClickLog& log,
                            const QueryIndex& queries, const LoggingStats& stats,
                            const RegressionModel& regression, const BiasParams& assumed,
                            const RankWeightFn& weight_fn, int k, const EvalMode& mode);

// One term of the ratio-reward reformulation: the estimator value equals
// (1/N) sum over terms of (omega(d | q_i, policy) / denominator) * reward.
struct RatioRewardTerm {
  long interaction = 0;
  int query_id = 0;
  int doc_id = 0;
  double denominator = 0.0;  // floored logging weight, strictly positive
  double reward = 0.0;
};

struct RatioReward {
  std::vector<RatioRewardTerm> terms;
  double floor = 0.0;
};

// Materializes every (interaction, document) term with rewards
// reward = denominator * g_i(d). Intended for inspection and tests; the
// trainer consumes the aggregated form above.
RatioReward RatioRewardDecomposition(EstimatorKind kind, const ClickLog& log,
                                     const QueryIndex& queries,
                                     const LoggingStats& stats,
                                     const RegressionModel* regression,
                                     const BiasParams* assumed,
                                     double omega0_floor);

}  // namespace ranksafe

#endif  // RANKSAFE_ESTIMATORS_H_
