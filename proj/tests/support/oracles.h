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

// Independent brute-force oracles for the statistical test suites. These
// deliberately avoid the code paths they are used to check: utilities come
// from direct enumeration sums, estimator expectations from exhaustive
// (ranking, click-vector) enumeration, and gradients from central finite
// differences.

#ifndef RANKSAFE_TESTS_SUPPORT_ORACLES_H_
#define RANKSAFE_TESTS_SUPPORT_ORACLES_H_

#include <functional>
#include <vector>

#include "ranksafe/click_sim.h"
#include "ranksafe/dataset.h"
#include "ranksafe/policy.h"
#include "ranksafe/rng.h"

namespace ranksafe {
namespace testing {

// A small random ranking instance: one query plus candidate and logging
// policies with moderate weights.
struct Instance {
  Query query;
  PolicyParams policy;
  PolicyParams logging;
};

Instance RandomInstance(Rng& rng, int max_docs = 5, int feature_dim = 3);

// E over logging rankings and click outcomes of a per-interaction
// statistic, by exhaustive enumeration; `value_of` sees a one-entry log.
double ExpectedSingleInteractionValue(
    const Query& query, const PolicyParams& logging, ClickModelKind kind,
    const BiasParams& bias, int k,
    const std::function<double(const ClickLog&)>& value_of);

// sum_y P(y) sum_j weight_fn(j) P(R=1 | grade of y_j): the true utility of
// one query, computed without the per-document weight decomposition.
double EnumeratedTrueUtility(const PolicyParams& policy, const Query& query,
                             const RankWeightFn& weight_fn, int k);

// Central finite differences of f with respect to the policy weights.
std::vector<double> FiniteDifferenceGradient(
    const PolicyParams& params,
    const std::function<double(const PolicyParams&)>& f, double step = 1e-5);

// max_i |got_i - want_i| / max(1e-12, ||want||_inf, |want_i|)
double MaxRelativeError(const std::vector<double>& got,
                        const std::vector<double>& want);

}  // namespace testing
}  // namespace ranksafe

#endif  // RANKSAFE_TESTS_SUPPORT_ORACLES_H_
