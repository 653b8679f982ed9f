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

// Click-log generation under position-bias, trust-bias, or adversarial
// user models, driven by a stochastic logging policy.

#ifndef RANKSAFE_CLICK_SIM_H_
#define RANKSAFE_CLICK_SIM_H_

#include <cstdint>
#include <string>
#include <vector>

#include "ranksafe/dataset.h"
#include "ranksafe/policy.h"

namespace ranksafe {

// Per-rank examination (alpha) and trust (beta) parameters; vectors of
// length K, with alpha_k + beta_k <= 1 so click probabilities stay valid
// under every model.
struct BiasParams {
  std::vector<double> alpha;
  std::vector<double> beta;

  int K() const { return static_cast<int>(alpha.size()); }

  // The empirically measured trust-bias vectors this library defaults to
  // (K = 5): alpha [0.35, 0.53, 0.55, 0.54, 0.52],
  //          beta  [0.65, 0.26, 0.15, 0.11, 0.08].
  static BiasParams Default();
};

// Throws ArgumentError if the vectors are mismatched, negative, or allow
// click probabilities above 1.
void ValidateBias(const BiasParams& bias);

enum class ClickModelKind { kPosition, kTrust, kAdversarial };

const char* ToString(ClickModelKind kind);
ClickModelKind ParseClickModelKind(const std::string& name);

// P(C=1 | rank, rel_prob):
//   position:    alpha_k * rel
//   trust:       alpha_k * rel + beta_k
//   adversarial: 1 - (alpha_k * rel + beta_k)
// rank is 1-based and must not exceed K (documents beyond K are never
// presented).
double ClickProbability(ClickModelKind kind, const BiasParams& bias, int rank,
                        double rel_prob);

struct ClickLogEntry {
  int query_id = 0;
  RankedList presented;
  std::vector<uint8_t> clicks;  // aligned with presented.positions
};

struct ClickLog {
  std::vector<ClickLogEntry> entries;
  ClickModelKind model = ClickModelKind::kTrust;
  int k = 0;

  long N() const { return static_cast<long>(entries.size()); }
};

// Draws num_interactions impressions: a uniformly random query, a top-k
// ranking from the logging policy, then independent Bernoulli clicks per
// presented position. Each interaction uses a stream derived from
// (seed, interaction index), so output is independent of any parallel
// execution order.
ClickLog Simulate(const PolicyParams& logging, const std::vector<Query>& queries,
                  ClickModelKind kind, const BiasParams& bias, int k,
                  long num_interactions, uint64_t seed);

// Line format: `qid <tab> doc_ids(comma-sep) <tab> clicks(comma-sep 0/1)`,
// preceded by a `# ranksafe-clicklog v1 model=<m> k=<k>` header.
void SaveClickLog(const ClickLog& log, const std::string& path);
ClickLog LoadClickLog(const std::string& path);

}  // namespace ranksafe

#endif  // RANKSAFE_CLICK_SIM_H_
