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

// Risk-bounded training objective: normalized exposure distributions, the
// second-moment exposure divergence between a candidate and the logging
// policy, and the high-confidence lower bound on true utility that the
// risk-aware trainer maximizes.

#ifndef RANKSAFE_SAFETY_H_
#define RANKSAFE_SAFETY_H_

#include <vector>

#include "ranksafe/click_sim.h"
#include "ranksafe/dataset.h"
#include "ranksafe/estimators.h"
#include "ranksafe/logging_stats.h"
#include "ranksafe/policy.h"

namespace ranksafe {

// Per-query exposure profile normalized to a probability distribution
// over the query's documents.
struct ExposureDistribution {
  std::vector<double> probs;
};

struct SafetyConfig {
  double delta = 0.95;  // confidence in (0, 1]; 1 disables the penalty
  double z = 1.0;       // bound scale constant
};

void ValidateSafetyConfig(const SafetyConfig& cfg);

// rho / sum(rho). Throws ArgumentError when the input is all-zero or has
// negative entries.
ExposureDistribution NormalizeExposure(const std::vector<double>& rho);

// sum_d now(d)^2 / logging(d) for one query; >= 1, with equality exactly
// when the distributions coincide. Zero-over-zero terms contribute 0;
// mass on a document with zero logging exposure makes the divergence
// undefined and throws ArgumentError.
double RenyiTerm(const ExposureDistribution& now, const ExposureDistribution& logging);

// estimate - sqrt((Z / N) * ((1 - delta) / delta) * renyi).
double HighConfidenceLowerBound(double estimate, long num_interactions,
                                const SafetyConfig& cfg, double renyi);

// Value and weight-gradient of the bound, with the component pieces
// exposed for diagnostics and tests. The divergence averages per-query
// terms weighted by each query's share of the log; the candidate policy's
// exposure uses the same rankings (exact or sampled) as its metric
// weights, and the logging side uses the (clipped) rho0 statistics, so
// support containment holds by construction.
struct SafeObjectiveParts {
  double estimate = 0.0;
  double renyi = 0.0;
  double penalty = 0.0;
  double bound = 0.0;
  std::vector<double> gradient;           // of the bound
  std::vector<double> estimate_gradient;  // of the estimate alone
  std::vector<double> renyi_gradient;     // of the divergence term alone
};

SafeObjectiveParts SafeObjectiveGradient(const PolicyParams& policy,
                                         const QueryIndex& queries,
                                         const AggregatedLog& agg,
                                         const LoggingStats& clipped_stats,
                                         const BiasParams& bias,
                                         const SafetyConfig& cfg,
                                         const RankWeightFn& weight_fn, int k,
                                         const EvalMode& mode);

// Convenience overload that aggregates the raw click log first.
SafeObjectiveParts SafeObjectiveGradient(
    const PolicyParams& policy, const QueryIndex& queries, const ClickLog& log,
    const LoggingStats& clipped_stats, EstimatorKind kind,
    const RegressionModel* regression, const BiasParams& bias,
    const SafetyConfig& cfg, const RankWeightFn& weight_fn, int k,
    const EvalMode& mode);

}  // namespace ranksafe

#endif  // RANKSAFE_SAFETY_H_
