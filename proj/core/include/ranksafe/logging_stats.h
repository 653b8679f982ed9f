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

// Logging-policy exposure statistics: per-(query, document) examination
// propensities rho0 = E[alpha at displayed rank] and logging metric weights
// omega0 = E[alpha + beta at displayed rank], estimated by Monte Carlo or
// computed exactly by enumeration; plus the lower-bound propensity clipping
// applied to training-side statistics.

#ifndef RANKSAFE_LOGGING_STATS_H_
#define RANKSAFE_LOGGING_STATS_H_

#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "ranksafe/click_sim.h"
#include "ranksafe/dataset.h"
#include "ranksafe/policy.h"

namespace ranksafe {

struct QueryLoggingStats {
  // All vectors are aligned with the query's document order.
  std::vector<int> doc_ids;
  std::vector<double> rho0;    // E[alpha_{rank(d)}], 0 outside the top-K
  std::vector<double> omega0;  // E[alpha_{rank(d)} + beta_{rank(d)}]
  // Fixed at estimation time as omega0 - rho0; clipping later raises rho0
  // only, so the trust offset stays the unclipped one.
  std::vector<double> beta0;
  long samples = 0;  // Monte-Carlo sample count; 0 means exact
};

struct LoggingStats {
  std::unordered_map<int, QueryLoggingStats> by_query;

  const QueryLoggingStats& at(int query_id) const;
  const QueryLoggingStats* find(int query_id) const;
};

// Estimates rho0/omega0/beta0 for every query. Sampled mode draws
// mode.samples rankings per query from a stream derived from
// (mode.seed, query_id); exact mode enumerates rank prefixes.
LoggingStats EstimateLoggingStats(const PolicyParams& logging,
                                  const std::vector<Query>& queries,
                                  const BiasParams& bias, int k,
                                  const EvalMode& mode);

inline double PropensityClipThreshold(long num_interactions) {
  return 10.0 / std::sqrt(static_cast<double>(num_interactions));
}

// rho0 <- max(rho0, 10 / sqrt(N)). omega0 and beta0 are left untouched;
// the floor protects only the propensity denominators.
LoggingStats ClipPropensities(const LoggingStats& stats, long num_interactions);

// Text table `qid, doc_id, rho0, omega0, count` (beta0 is reconstructed as
// omega0 - rho0 on load, so only unclipped stats should be persisted).
void SaveLoggingStats(const LoggingStats& stats, const std::string& path);
LoggingStats LoadLoggingStats(const std::string& path);

}  // namespace ranksafe

#endif  // RANKSAFE_LOGGING_STATS_H_
