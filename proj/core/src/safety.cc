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

#include "ranksafe/safety.h"

#include <cmath>

#include "ranksafe/errors.h"
#include "ranksafe/metrics.h"
#include "ranksafe/rng.h"

namespace ranksafe {
namespace {

constexpr uint64_t kSafeStream = 0x73616665;

// d(renyi)/d(rho_d) before normalization: with g_e = rho'_e / rho0'_e,
//   dT/drho_d = (2 / S) * (g_d - sum_e g_e rho'_e),   S = sum_e rho_e.
// Derivation: rho'_e = rho_e / S and T = sum_e rho'_e^2 / rho0'_e.
std::vector<double> RenyiRhoDerivative(const std::vector<double>& rho,
                                       const ExposureDistribution& logging) {
  double total = 0.0;
  for (const double r : rho) total += r;
  std::vector<double> g(rho.size(), 0.0);
  double cross = 0.0;
  for (size_t i = 0; i < rho.size(); ++i) {
    const double now = rho[i] / total;
    if (logging.probs[i] > 0.0) {
      g[i] = now / logging.probs[i];
    } else if (now > 0.0) {
      throw ArgumentError("candidate policy exposes a document the logging "
                          "policy never exposes; divergence undefined");
    }
    cross += g[i] * now;
  }
  std::vector<double> deriv(rho.size());
  for (size_t i = 0; i < rho.size(); ++i) {
    deriv[i] = 2.0 / total * (g[i] - cross);
  }
  return deriv;
}

}  // namespace

void ValidateSafetyConfig(const SafetyConfig& cfg) {
  if (!(cfg.delta > 0.0) || cfg.delta > 1.0) {
    throw ArgumentError("safety delta must lie in (0, 1]");
  }
  if (!(cfg.z > 0.0)) throw ArgumentError("safety Z must be positive");
}

ExposureDistribution NormalizeExposure(const std::vector<double>& rho) {
  double total = 0.0;
  for (const double r : rho) {
    if (r < 0.0) throw ArgumentError("exposure entries must be nonnegative");
    total += r;
  }
  if (!(total > 0.0)) {
    throw ArgumentError("cannot normalize an all-zero exposure vector");
  }
  ExposureDistribution dist;
  dist.probs.reserve(rho.size());
  for (const double r : rho) dist.probs.push_back(r / total);
  return dist;
}

double RenyiTerm(const ExposureDistribution& now, const ExposureDistribution& logging) {
  if (now.probs.size() != logging.probs.size()) {
    throw ArgumentError("exposure distributions have different sizes");
  }
  double term = 0.0;
  for (size_t i = 0; i < now.probs.size(); ++i) {
    if (logging.probs[i] > 0.0) {
      term += now.probs[i] * now.probs[i] / logging.probs[i];
    } else if (now.probs[i] > 0.0) {
      throw ArgumentError("candidate policy exposes a document the logging "
                          "policy never exposes; divergence undefined");
    }
  }
  return term;
}

double HighConfidenceLowerBound(double estimate, long num_interactions,
                                const SafetyConfig& cfg, double renyi) {
  if (num_interactions < 1) throw ArgumentError("N must be >= 1");
  ValidateSafetyConfig(cfg);
  if (cfg.delta == 1.0) return estimate;  // the penalty vanishes exactly
  const double scale = cfg.z / static_cast<double>(num_interactions) *
                       (1.0 - cfg.delta) / cfg.delta;
  return estimate - std::sqrt(scale * renyi);
}

SafeObjectiveParts SafeObjectiveGradient(const PolicyParams& policy,
                                         const QueryIndex& queries,
                                         const AggregatedLog& agg,
                                         const LoggingStats& clipped_stats,
                                         const BiasParams& bias,
                                         const SafetyConfig& cfg,
                                         const RankWeightFn& weight_fn, int k,
                                         const EvalMode& mode) {
  ValidateSafetyConfig(cfg);
  const size_t dim = policy.weights.size();
  const double n = static_cast<double>(agg.num_interactions);
  const bool penalized = cfg.delta < 1.0;
  const RankWeightFn alpha_at = ExaminationWeight(bias, k);

  SafeObjectiveParts parts;
  parts.estimate_gradient.assign(dim, 0.0);
  parts.renyi_gradient.assign(dim, 0.0);

  for (const AggregatedLog::QueryTerms& terms : agg.queries) {
    const Query& query = queries.at(terms.query_id);
    const double query_share = static_cast<double>(terms.interactions) / n;

    if (mode.exact) {
      const std::vector<double> omega =
          ExpectedMetricWeights(policy, query, weight_fn, k, mode);
      const std::vector<std::vector<double>> omega_grad =
          ExpectedMetricWeightGradients(policy, query, weight_fn, k, mode.cap);
      for (size_t i = 0; i < omega.size(); ++i) {
        parts.estimate += omega[i] * terms.coef[i];
        for (size_t f = 0; f < dim; ++f) {
          parts.estimate_gradient[f] += omega_grad[i][f] * terms.coef[i];
        }
      }
      if (penalized) {
        const std::vector<double> rho =
            ExpectedMetricWeights(policy, query, alpha_at, k, mode);
        const ExposureDistribution logging =
            NormalizeExposure(clipped_stats.at(terms.query_id).rho0);
        parts.renyi += query_share * RenyiTerm(NormalizeExposure(rho), logging);
        const std::vector<double> deriv = RenyiRhoDerivative(rho, logging);
        const std::vector<std::vector<double>> rho_grad =
            ExpectedMetricWeightGradients(policy, query, alpha_at, k, mode.cap);
        for (size_t i = 0; i < rho.size(); ++i) {
          for (size_t f = 0; f < dim; ++f) {
            parts.renyi_gradient[f] += query_share * deriv[i] * rho_grad[i][f];
          }
        }
      }
      continue;
    }

    // Sampled path: one batch of rankings drives the estimate, the
    // exposure profile, and both score-function gradients.
    EvalMode per_query = mode;
    per_query.seed =
        DeriveSeed(mode.seed, {kSafeStream, static_cast<uint64_t>(terms.query_id)});
    const std::vector<RankedList> rankings =
        SampleRankings(policy, query, k, per_query.samples, per_query.seed);
    const std::vector<double> omega = MeanWeights(query, rankings, weight_fn);
    for (size_t i = 0; i < omega.size(); ++i) parts.estimate += omega[i] * terms.coef[i];
    const std::vector<double> est_grad = ReturnGradientFromRankings(
        policy, query, rankings, terms.coef, weight_fn, /*baseline=*/true);
    for (size_t f = 0; f < dim; ++f) parts.estimate_gradient[f] += est_grad[f];

    if (penalized) {
      const std::vector<double> rho = MeanWeights(query, rankings, alpha_at);
      const ExposureDistribution logging =
          NormalizeExposure(clipped_stats.at(terms.query_id).rho0);
      parts.renyi += query_share * RenyiTerm(NormalizeExposure(rho), logging);
      std::vector<double> deriv = RenyiRhoDerivative(rho, logging);
      for (double& d : deriv) d *= query_share;
      const std::vector<double> renyi_grad = ReturnGradientFromRankings(
          policy, query, rankings, deriv, alpha_at, /*baseline=*/true);
      for (size_t f = 0; f < dim; ++f) parts.renyi_gradient[f] += renyi_grad[f];
    }
  }

  parts.gradient = parts.estimate_gradient;
  if (penalized) {
    const double scale = cfg.z / n * (1.0 - cfg.delta) / cfg.delta;
    parts.penalty = std::sqrt(scale * parts.renyi);
    if (parts.penalty > 0.0) {
      const double factor = scale / (2.0 * parts.penalty);
      for (size_t f = 0; f < dim; ++f) {
        parts.gradient[f] -= factor * parts.renyi_gradient[f];
      }
    }
  }
  parts.bound = parts.estimate - parts.penalty;
  return parts;
}

SafeObjectiveParts SafeObjectiveGradient(
    const PolicyParams& policy, const QueryIndex& queries, const ClickLog& log,
    const LoggingStats& clipped_stats, EstimatorKind kind,
    const RegressionModel* regression, const BiasParams& bias,
    const SafetyConfig& cfg, const RankWeightFn& weight_fn, int k,
    const EvalMode& mode) {
  const AggregatedLog agg = AggregateEstimatorTerms(kind, log, queries, clipped_stats,
                                                    regression, &bias, 0.0);
  return SafeObjectiveGradient(policy, queries, agg, clipped_stats, bias, cfg,
                               weight_fn, k, mode);
}

}  // namespace ranksafe
