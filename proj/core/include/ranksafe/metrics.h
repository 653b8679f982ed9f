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

#ifndef RANKSAFE_METRICS_H_
#define RANKSAFE_METRICS_H_

#include <vector>

#include "ranksafe/click_sim.h"
#include "ranksafe/dataset.h"
#include "ranksafe/policy.h"

namespace ranksafe {

// Expected exposure weight alpha_k + beta_k at the displayed rank, 0 beyond
// the top-k. This is the metric-weight function whose logging-side
// expectation the omega0 statistics estimate.
RankWeightFn ExposureWeight(const BiasParams& bias, int k);

// Examination-only weight alpha_k; the propensity counterpart of the above.
RankWeightFn ExaminationWeight(const BiasParams& bias, int k);

// Mean over queries of E[DCG@k under the policy] / ideal DCG@k.
// gain(grade) = 2^grade - 1 by default (exponential_gain = false uses the
// grade itself). Queries whose grades are all zero are skipped; if every
// query is skipped the metric is undefined and an ArgumentError is thrown.
double NdcgAtK(const PolicyParams& policy, const std::vector<Query>& queries,
               int k, const EvalMode& mode, bool exponential_gain = true);

// U(policy) = mean over queries of sum_d omega(d | q, policy) * P(R=1 | d),
// with P(R=1 | d) = 0.25 * grade.
double TrueUtility(const PolicyParams& policy, const std::vector<Query>& queries,
                   const RankWeightFn& weight_fn, int k, const EvalMode& mode);

}  // namespace ranksafe

#endif  // RANKSAFE_METRICS_H_
