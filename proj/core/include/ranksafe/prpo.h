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

// Proximal ranking objective: clipping the ratio between a candidate
// policy's metric weights and the logging policy's into [eps_minus,
// eps_plus] removes any incentive to move documents far from where the
// logging policy puts them. Includes the clipped objective, its indicator
// gradient, adaptive clip schedules, and an enumeration check of the
// ratio-one safety property.

#ifndef RANKSAFE_PRPO_H_
#define RANKSAFE_PRPO_H_

#include <string>
#include <vector>

#include "ranksafe/dataset.h"
#include "ranksafe/estimators.h"
#include "ranksafe/policy.h"

namespace ranksafe {

struct ClipRange {
  double eps_minus = 1.0;  // in (0, 1]
  double eps_plus = 1.0;   // >= 1
};

void ValidateClipRange(const ClipRange& range);

// f(x, eps-, eps+, r) = min(x, eps+) * r for r >= 0,
//                       max(x, eps-) * r otherwise.
double ClipWeight(double x, const ClipRange& range, double r);

// d/dx ClipWeight as the indicator form
//   1[(r > 0 and x <= eps+) or (r < 0 and x >= eps-)] * r,
// with inclusive comparisons at the kinks; 0 when r is 0.
double PrpoGradientFactor(double x, const ClipRange& range, double r);

// sum_t ClipWeight(ratios[t], range, rewards[t]).
double PrpoObjective(const std::vector<double>& ratios,
                     const std::vector<double>& rewards, const ClipRange& range);

// Clip width as a function of the click-log size. delta maps to
// (eps- = delta, eps+ = 1/delta) after clamping delta to at most 1
// (schedules like c/N exceed 1 for tiny N, which would invert the range;
// clamping yields the maximally conservative (1, 1)).
class ClipSchedule {
 public:
  static ClipSchedule Static(double delta);
  static ClipSchedule OverN(double numerator);  // delta(N) = numerator / N
  static ClipSchedule InverseLogN();            // delta(N) = 1 / log(N)
  // "const:<v>" | "<c>/N" | "1/log(N)"
  static ClipSchedule Parse(const std::string& text);

  double DeltaAt(long num_interactions) const;
  std::string ToString() const;

 private:
  enum class Kind { kStatic, kOverN, kInverseLogN };
  Kind kind_ = Kind::kStatic;
  double value_ = 1.0;
};

ClipRange ResolveClipRange(const ClipSchedule& schedule, long num_interactions);

// Gradient of the clipped objective through the candidate policy:
//   sum_{q,d} grad(omega(d|q) / omega0(d|q)) *
//             PrpoGradientFactor(ratio, range, reward summed per sign).
// Terms come from the aggregated log (rewards are omega0 * g, so the
// aggregated sign channels scale back by omega0). The result carries the
// same 1/N normalization as the aggregate coefficients.
std::vector<double> PrpoGradient(const PolicyParams& policy,
                                 const QueryIndex& queries,
                                 const AggregatedLog& agg, const ClipRange& range,
                                 const RankWeightFn& weight_fn, int k,
                                 const EvalMode& mode);

// (1/N)-normalized clipped objective value for the same inputs.
double PrpoAggregateObjective(const PolicyParams& policy, const QueryIndex& queries,
                              const AggregatedLog& agg, const ClipRange& range,
                              const RankWeightFn& weight_fn, int k,
                              const EvalMode& mode);

// With eps- = eps+ = 1 and every presented document's reward nonzero, the
// ranking maximizing the clipped objective is the logging ranking itself.
// Enumerates every candidate ranking of the query and checks that the
// logging ranking attains the maximum (ties allowed). `rewards` aligns
// with logging_ranking.positions; a zero reward violates the premise and
// throws ArgumentError.
bool VerifySafetyTheorem(const Query& query, const RankedList& logging_ranking,
                         const std::vector<double>& rewards,
                         const RankWeightFn& weight_fn, int k,
                         long cap = kDefaultEnumerationCap);

}  // namespace ranksafe

#endif  // RANKSAFE_PRPO_H_
