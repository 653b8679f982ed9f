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

// Gradient-ascent training loops: supervised rankers on labeled queries
// (production and skyline models), and counterfactual training on click
// logs under the plain, risk-bounded, or ratio-clipped objectives, with
// per-query control variates and click-based early stopping.

#ifndef RANKSAFE_TRAINER_H_
#define RANKSAFE_TRAINER_H_

#include <optional>
#include <vector>

#include "ranksafe/click_sim.h"
#include "ranksafe/dataset.h"
#include "ranksafe/estimators.h"
#include "ranksafe/logging_stats.h"
#include "ranksafe/policy.h"
#include "ranksafe/prpo.h"
#include "ranksafe/safety.h"

namespace ranksafe {

enum class Objective { kPlain, kSafeBound, kPrpo };

const char* ToString(Objective objective);

struct LearningRate {
  double base = 0.01;
  double decay = 0.0;  // lr(epoch) = base / (1 + decay * epoch)

  double At(int epoch) const {
    return base / (1.0 + decay * static_cast<double>(epoch));
  }
};

struct TrainConfig {
  Objective objective = Objective::kPlain;
  EstimatorKind estimator = EstimatorKind::kDoublyRobust;
  LearningRate learning_rate;
  int epochs = 120;
  int samples_per_query = 8;
  int early_stop_patience = 10;
  bool baseline = true;  // per-query mean-return control variate
  uint64_t seed = 1;
  int k = 5;
  std::optional<SafetyConfig> safety;  // required iff objective == kSafeBound
  std::optional<ClipSchedule> clip;    // required iff objective == kPrpo
  bool exact_gradients = false;        // enumeration instead of sampling
  long enumeration_cap = kDefaultEnumerationCap;
  int validation_samples = 256;  // ranking samples per validation query
  int test_eval_samples = 256;   // diagnostic NDCG samples; 0 disables
};

void ValidateTrainConfig(const TrainConfig& cfg);

struct EpochStats {
  int epoch = 0;
  double objective_value = 0.0;      // training objective at these params
  double validation_estimate = 0.0;  // estimator value on validation clicks
  double test_ndcg = 0.0;            // diagnostic; 0 when disabled
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  PolicyParams final_params;  // parameters with the best validation estimate
  int best_epoch = 0;
  int stopped_epoch = 0;
};

struct TrainInputs {
  const QueryIndex* queries = nullptr;  // training-split lookup
  const ClickLog* train_log = nullptr;
  const LoggingStats* train_stats = nullptr;  // clipped
  const QueryIndex* validation_queries = nullptr;
  const ClickLog* validation_log = nullptr;
  const LoggingStats* validation_stats = nullptr;  // unclipped
  PolicyParams init;                               // the logging policy
  BiasParams assumed;                              // learner's bias model
  RankWeightFn weight_fn;                          // training metric weight
  const std::vector<Query>* test_queries = nullptr;  // diagnostic NDCG
};

// REINFORCE on the true relevance probabilities:
// maximizes mean over queries of E_y[ sum_d weight_fn(rank) P(R=1|d) ],
// starting from zero weights. Used for the production ranker and skyline.
PolicyParams TrainSupervised(const std::vector<Query>& labeled, int epochs,
                             const LearningRate& lr, uint64_t seed,
                             const RankWeightFn& weight_fn, int k,
                             int samples_per_query = 8, bool baseline = true);

// Same weights, new temperature: the stochastic logging policy is a
// softened copy of the production ranker.
PolicyParams MakeLoggingPolicy(const PolicyParams& production, double temperature);

// One gradient evaluation of the configured objective over the aggregated
// log; optionally reports the objective value at the given parameters.
// The risk-bounded objective reads the clipped training statistics for its
// logging-side exposure distributions.
std::vector<double> ReinforceStep(const PolicyParams& policy,
                                  const QueryIndex& queries,
                                  const AggregatedLog& agg, const TrainConfig& cfg,
                                  const LoggingStats& train_stats,
                                  const BiasParams& assumed,
                                  const RankWeightFn& weight_fn,
                                  uint64_t step_seed,
                                  double* objective_value = nullptr);

// Full training loop: warm-started at the logging policy, one
// ReinforceStep per epoch, validation-estimate early stopping keeping the
// best parameters seen. Deterministic given cfg.seed.
TrainReport TrainCounterfactual(const TrainInputs& inputs, const TrainConfig& cfg);

}  // namespace ranksafe

#endif  // RANKSAFE_TRAINER_H_
