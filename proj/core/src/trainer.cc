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

#include "ranksafe/trainer.h"

#include <algorithm>
#include <cmath>

#include "ranksafe/errors.h"
#include "ranksafe/metrics.h"
#include "ranksafe/rng.h"

namespace ranksafe {
namespace {

constexpr uint64_t kSupervisedStream = 0x73757076;
constexpr uint64_t kStepStream = 0x73746570;
constexpr uint64_t kValidationStream = 0x76616c65;
constexpr uint64_t kDiagnosticStream = 0x64696167;

// Zero-guard for the weight-ratio denominators. Documents without logging
// exposure carry zero rewards, so this floor only keeps their (inert)
// ratios finite; anything larger would distort the ratios of rewarded
// documents and reopen the incentive the clip range is meant to remove.
constexpr double kRatioZeroGuard = 1e-9;

EvalMode StepMode(const TrainConfig& cfg, uint64_t step_seed) {
  return cfg.exact_gradients
             ? EvalMode::Exact(cfg.enumeration_cap)
             : EvalMode::Sampled(cfg.samples_per_query, step_seed);
}

// Gradient and value of the unregularized estimator objective
//   sum_q sum_d omega(d | q, policy) * coef(q, d).
std::vector<double> PlainGradient(const PolicyParams& policy,
                                  const QueryIndex& queries,
                                  const AggregatedLog& agg, const TrainConfig& cfg,
                                  const RankWeightFn& weight_fn,
                                  const EvalMode& mode, double* value) {
  const size_t dim = policy.weights.size();
  std::vector<double> gradient(dim, 0.0);
  double estimate = 0.0;
  for (const AggregatedLog::QueryTerms& terms : agg.queries) {
    const Query& query = queries.at(terms.query_id);
    if (mode.exact) {
      const std::vector<double> omega =
          ExpectedMetricWeights(policy, query, weight_fn, cfg.k, mode);
      const std::vector<std::vector<double>> omega_grad =
          ExpectedMetricWeightGradients(policy, query, weight_fn, cfg.k, mode.cap);
      for (size_t i = 0; i < omega.size(); ++i) {
        estimate += omega[i] * terms.coef[i];
        for (size_t f = 0; f < dim; ++f) {
          gradient[f] += omega_grad[i][f] * terms.coef[i];
        }
      }
    } else {
      EvalMode per_query = mode;
      per_query.seed =
          DeriveSeed(mode.seed, {kStepStream, static_cast<uint64_t>(terms.query_id)});
      const std::vector<RankedList> rankings = SampleRankings(
          policy, query, cfg.k, per_query.samples, per_query.seed);
      const std::vector<double> omega = MeanWeights(query, rankings, weight_fn);
      for (size_t i = 0; i < omega.size(); ++i) estimate += omega[i] * terms.coef[i];
      const std::vector<double> g = ReturnGradientFromRankings(
          policy, query, rankings, terms.coef, weight_fn, cfg.baseline);
      for (size_t f = 0; f < dim; ++f) gradient[f] += g[f];
    }
  }
  if (value != nullptr) *value = estimate;
  return gradient;
}

}  // namespace

const char* ToString(Objective objective) {
  switch (objective) {
    case Objective::kPlain:
      return "plain";
    case Objective::kSafeBound:
      return "safe_bound";
    case Objective::kPrpo:
      return "prpo";
  }
  return "unknown";
}

void ValidateTrainConfig(const TrainConfig& cfg) {
  if (cfg.epochs < 0) throw ArgumentError("epochs must be >= 0");
  if (cfg.k < 1) throw ArgumentError("k must be >= 1");
  if (cfg.early_stop_patience < 1) throw ArgumentError("patience must be >= 1");
  if (!cfg.exact_gradients) {
    if (cfg.samples_per_query < 1) {
      throw ArgumentError("samples_per_query must be >= 1");
    }
    if (cfg.baseline && cfg.samples_per_query < 2) {
      throw ArgumentError("the per-query control variate needs "
                          "samples_per_query >= 2");
    }
  }
  if ((cfg.objective == Objective::kSafeBound) != cfg.safety.has_value()) {
    throw ArgumentError("safety config must be present exactly for the "
                        "safe_bound objective");
  }
  if ((cfg.objective == Objective::kPrpo) != cfg.clip.has_value()) {
    throw ArgumentError("clip schedule must be present exactly for the "
                        "prpo objective");
  }
  if (cfg.safety.has_value()) ValidateSafetyConfig(*cfg.safety);
}

PolicyParams TrainSupervised(const std::vector<Query>& labeled, int epochs,
                             const LearningRate& lr, uint64_t seed,
                             const RankWeightFn& weight_fn, int k,
                             int samples_per_query, bool baseline) {
  if (labeled.empty()) throw ArgumentError("no labeled queries to train on");
  if (epochs < 0) throw ArgumentError("epochs must be >= 0");
  if (baseline && samples_per_query < 2) {
    throw ArgumentError("the per-query control variate needs >= 2 samples");
  }
  const size_t dim = labeled.front().documents.empty()
                         ? 0
                         : labeled.front().documents.front().features.size();
  PolicyParams params{std::vector<double>(dim, 0.0), 1.0};

  std::vector<double> grad(dim);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (const Query& query : labeled) {
      std::vector<double> relevance;
      relevance.reserve(query.documents.size());
      for (const Document& doc : query.documents) {
        relevance.push_back(RelevanceProbability(doc.relevance_grade));
      }
      const uint64_t query_seed =
          DeriveSeed(seed, {kSupervisedStream, static_cast<uint64_t>(epoch),
                            static_cast<uint64_t>(query.query_id)});
      const std::vector<double> g = PerDocReturnGradient(
          params, query, relevance, weight_fn, k,
          EvalMode::Sampled(samples_per_query, query_seed), baseline);
      for (size_t f = 0; f < dim; ++f) grad[f] += g[f];
    }
    const double step = lr.At(epoch) / static_cast<double>(labeled.size());
    for (size_t f = 0; f < dim; ++f) params.weights[f] += step * grad[f];
  }
  return params;
}

PolicyParams MakeLoggingPolicy(const PolicyParams& production, double temperature) {
  if (!(temperature > 0.0)) throw ArgumentError("temperature must be positive");
  PolicyParams logging = production;
  logging.temperature = temperature;
  return logging;
}

std::vector<double> ReinforceStep(const PolicyParams& policy,
                                  const QueryIndex& queries,
                                  const AggregatedLog& agg, const TrainConfig& cfg,
                                  const LoggingStats& train_stats,
                                  const BiasParams& assumed,
                                  const RankWeightFn& weight_fn,
                                  uint64_t step_seed, double* objective_value) {
  ValidateTrainConfig(cfg);
  const EvalMode mode = StepMode(cfg, step_seed);
  switch (cfg.objective) {
    case Objective::kPlain:
      return PlainGradient(policy, queries, agg, cfg, weight_fn, mode,
                           objective_value);
    case Objective::kSafeBound: {
      const SafeObjectiveParts parts = SafeObjectiveGradient(
          policy, queries, agg, train_stats, assumed, *cfg.safety, weight_fn,
          cfg.k, mode);
      if (objective_value != nullptr) *objective_value = parts.bound;
      return parts.gradient;
    }
    case Objective::kPrpo: {
      const ClipRange range = ResolveClipRange(*cfg.clip, agg.num_interactions);
      std::vector<double> gradient =
          PrpoGradient(policy, queries, agg, range, weight_fn, cfg.k, mode);
      if (objective_value != nullptr) {
        *objective_value = PrpoAggregateObjective(policy, queries, agg, range,
                                                  weight_fn, cfg.k, mode);
      }
      return gradient;
    }
  }
  throw InternalError("unhandled objective");
}

TrainReport TrainCounterfactual(const TrainInputs& inputs, const TrainConfig& cfg) {
  ValidateTrainConfig(cfg);
  if (inputs.queries == nullptr || inputs.train_log == nullptr ||
      inputs.train_stats == nullptr || inputs.validation_queries == nullptr ||
      inputs.validation_log == nullptr || inputs.validation_stats == nullptr ||
      !inputs.weight_fn) {
    throw ArgumentError("training inputs are incomplete");
  }
  ValidateBias(inputs.assumed);

  const double floor = kRatioZeroGuard;

  // The learner's regression models, fitted per split from that split's
  // clicks under the assumed bias.
  RegressionModel train_regression, validation_regression;
  const RegressionModel* train_reg_ptr = nullptr;
  const RegressionModel* val_reg_ptr = nullptr;
  if (cfg.estimator == EstimatorKind::kDoublyRobust) {
    train_regression = FitRegression(*inputs.train_log, *inputs.queries, inputs.assumed);
    validation_regression = FitRegression(*inputs.validation_log,
                                          *inputs.validation_queries, inputs.assumed);
    train_reg_ptr = &train_regression;
    val_reg_ptr = &validation_regression;
  }

  const AggregatedLog train_agg =
      AggregateEstimatorTerms(cfg.estimator, *inputs.train_log, *inputs.queries,
                              *inputs.train_stats, train_reg_ptr, &inputs.assumed,
                              floor);
  const AggregatedLog validation_agg = AggregateEstimatorTerms(
      cfg.estimator, *inputs.validation_log, *inputs.validation_queries,
      *inputs.validation_stats, val_reg_ptr, &inputs.assumed, floor);

  // Common random numbers across epochs: validation estimates of different
  // epochs differ only through the parameters.
  const EvalMode validation_mode =
      cfg.exact_gradients
          ? EvalMode::Exact(cfg.enumeration_cap)
          : EvalMode::Sampled(cfg.validation_samples,
                              DeriveSeed(cfg.seed, {kValidationStream}));
  auto validation_estimate = [&](const PolicyParams& params) {
    return EstimateFromAggregates(params, validation_agg, *inputs.validation_queries,
                                  inputs.weight_fn, cfg.k, validation_mode);
  };

  PolicyParams params = inputs.init;
  TrainReport report;
  report.final_params = params;

  double best_estimate = 0.0;
  for (int epoch = 0;; ++epoch) {
    double objective = 0.0;
    std::vector<double> gradient =
        ReinforceStep(params, *inputs.queries, train_agg, cfg, *inputs.train_stats,
                      inputs.assumed, inputs.weight_fn,
                      DeriveSeed(cfg.seed, {kStepStream, static_cast<uint64_t>(epoch)}),
                      &objective);

    EpochStats stats;
    stats.epoch = epoch;
    stats.objective_value = objective;
    stats.validation_estimate = validation_estimate(params);
    if (inputs.test_queries != nullptr && cfg.test_eval_samples > 0) {
      stats.test_ndcg = NdcgAtK(
          params, *inputs.test_queries, cfg.k,
          EvalMode::Sampled(cfg.test_eval_samples,
                            DeriveSeed(cfg.seed, {kDiagnosticStream,
                                                  static_cast<uint64_t>(epoch)})));
    }
    report.epochs.push_back(stats);

    if (epoch == 0 || stats.validation_estimate > best_estimate) {
      best_estimate = stats.validation_estimate;
      report.best_epoch = epoch;
      report.final_params = params;
    }
    report.stopped_epoch = epoch;

    if (epoch >= cfg.epochs) break;
    if (epoch - report.best_epoch >= cfg.early_stop_patience) break;

    const double lr = cfg.learning_rate.At(epoch);
    for (size_t f = 0; f < params.weights.size(); ++f) {
      params.weights[f] += lr * gradient[f];
    }
  }
  return report;
}

}  // namespace ranksafe
