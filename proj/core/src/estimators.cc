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

#include "ranksafe/estimators.h"

#include <algorithm>
#include <cmath>

#include "ranksafe/errors.h"
#include "ranksafe/rng.h"

namespace ranksafe {
namespace {

constexpr uint64_t kEstimateStream = 0x65737469;

double GuardedRatio(double numerator, double rho, int query_id, int doc_id) {
  if (rho > 0.0) return numerator / rho;
  if (numerator == 0.0) return 0.0;
  throw InternalError("nonzero correction with zero propensity for doc " +
                      std::to_string(doc_id) + " in query " +
                      std::to_string(query_id) +
                      "; clip the training-side statistics");
}

void CheckStatsAlignment(const Query& query, const QueryLoggingStats& stats) {
  if (stats.doc_ids.size() != query.documents.size()) {
    throw ArgumentError("logging stats for query " + std::to_string(query.query_id) +
                        " cover " + std::to_string(stats.doc_ids.size()) +
                        " documents, query has " +
                        std::to_string(query.documents.size()));
  }
  for (size_t i = 0; i < stats.doc_ids.size(); ++i) {
    if (stats.doc_ids[i] != query.documents[i].doc_id) {
      throw ArgumentError("logging stats for query " + std::to_string(query.query_id) +
                          " are not aligned with the query's document order");
    }
  }
}

// Fills g with the per-interaction estimator factors for every document of
// the entry's query (see the header for the three forms).
void PerInteractionFactors(EstimatorKind kind, const ClickLogEntry& entry,
                           const Query& query, const QueryLoggingStats& stats,
                           const RegressionModel* regression,
                           const BiasParams* assumed, std::vector<double>& g) {
  const size_t n = query.documents.size();
  g.assign(n, 0.0);

  // Clicks and displayed ranks mapped onto document indices.
  auto doc_index = [&query](int doc_id) {
    for (size_t i = 0; i < query.documents.size(); ++i) {
      if (query.documents[i].doc_id == doc_id) return static_cast<int>(i);
    }
    throw ArgumentError("click log references doc_id " + std::to_string(doc_id) +
                        " absent from query " + std::to_string(query.query_id));
  };

  switch (kind) {
    case EstimatorKind::kIpsPosition: {
      for (size_t j = 0; j < entry.presented.positions.size(); ++j) {
        if (!entry.clicks[j]) continue;
        const int i = doc_index(entry.presented.positions[j]);
        g[static_cast<size_t>(i)] =
            GuardedRatio(1.0, stats.rho0[static_cast<size_t>(i)], query.query_id,
                         entry.presented.positions[j]);
      }
      return;
    }
    case EstimatorKind::kIpsAffine: {
      for (size_t i = 0; i < n; ++i) {
        g[i] = GuardedRatio(-stats.beta0[i], stats.rho0[i], query.query_id,
                            query.documents[i].doc_id);
      }
      for (size_t j = 0; j < entry.presented.positions.size(); ++j) {
        if (!entry.clicks[j]) continue;
        const int i = doc_index(entry.presented.positions[j]);
        g[static_cast<size_t>(i)] =
            GuardedRatio(1.0 - stats.beta0[static_cast<size_t>(i)],
                         stats.rho0[static_cast<size_t>(i)], query.query_id,
                         entry.presented.positions[j]);
      }
      return;
    }
    case EstimatorKind::kDoublyRobust: {
      if (regression == nullptr || assumed == nullptr) {
        throw ArgumentError("the doubly-robust estimator needs a regression "
                            "model and the assumed bias parameters");
      }
      for (size_t i = 0; i < n; ++i) {
        g[i] = regression->At(query.query_id, query.documents[i].doc_id);
      }
      for (size_t j = 0; j < entry.presented.positions.size(); ++j) {
        const int i = doc_index(entry.presented.positions[j]);
        const double r_hat = g[static_cast<size_t>(i)];
        // Model-predicted click at the rank the document actually held.
        const double chat = assumed->alpha[j] * r_hat + assumed->beta[j];
        const double click = entry.clicks[j] ? 1.0 : 0.0;
        g[static_cast<size_t>(i)] +=
            GuardedRatio(click - chat, stats.rho0[static_cast<size_t>(i)],
                         query.query_id, entry.presented.positions[j]);
      }
      return;
    }
  }
  throw InternalError("unhandled estimator kind");
}

}  // namespace

const char* ToString(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kIpsPosition:
      return "ips_position";
    case EstimatorKind::kIpsAffine:
      return "ips_affine";
    case EstimatorKind::kDoublyRobust:
      return "dr";
  }
  return "unknown";
}

double RegressionModel::At(int query_id, int doc_id) const {
  const auto it = r_hat_.find(Key(query_id, doc_id));
  return it == r_hat_.end() ? 0.0 : it->second;
}

void RegressionModel::Set(int query_id, int doc_id, double value) {
  r_hat_[Key(query_id, doc_id)] = value;
}

RegressionModel FitRegression(const ClickLog& log, const QueryIndex& queries,
                              const BiasParams& assumed) {
  if (log.entries.empty()) throw ArgumentError("cannot fit on an empty click log");
  ValidateBias(assumed);

  struct Moments {
    long impressions = 0;
    long clicks = 0;
    double alpha_sum = 0.0;
    double beta_sum = 0.0;
  };
  std::unordered_map<int64_t, Moments> moments;
  for (const ClickLogEntry& entry : log.entries) {
    for (size_t j = 0; j < entry.presented.positions.size(); ++j) {
      const int64_t key = (static_cast<int64_t>(entry.query_id) << 32) |
                          static_cast<uint32_t>(entry.presented.positions[j]);
      Moments& m = moments[key];
      ++m.impressions;
      m.clicks += entry.clicks[j] ? 1 : 0;
      m.alpha_sum += assumed.alpha[j];
      m.beta_sum += assumed.beta[j];
    }
  }

  RegressionModel model;
  for (const auto& [key, m] : moments) {
    const int query_id = static_cast<int>(key >> 32);
    const int doc_id = static_cast<int>(key & 0xffffffff);
    if (queries.find(query_id) == nullptr) {
      throw ArgumentError("click log references unknown query " +
                          std::to_string(query_id));
    }
    if (m.alpha_sum <= 0.0) continue;  // no examination signal at these ranks
    const double r = (static_cast<double>(m.clicks) - m.beta_sum) / m.alpha_sum;
    model.Set(query_id, doc_id, std::clamp(r, 0.0, 1.0));
  }
  return model;
}

AggregatedLog AggregateEstimatorTerms(EstimatorKind kind, const ClickLog& log,
                                      const QueryIndex& queries,
                                      const LoggingStats& stats,
                                      const RegressionModel* regression,
                                      const BiasParams* assumed,
                                      double omega0_floor) {
  if (log.entries.empty()) throw ArgumentError("empty click log");

  AggregatedLog agg;
  agg.num_interactions = log.N();
  std::unordered_map<int, size_t> slot;
  std::vector<double> g;
  for (const ClickLogEntry& entry : log.entries) {
    const Query& query = queries.at(entry.query_id);
    const QueryLoggingStats& query_stats = stats.at(entry.query_id);

    auto [it, inserted] = slot.try_emplace(entry.query_id, agg.queries.size());
    if (inserted) {
      CheckStatsAlignment(query, query_stats);
      AggregatedLog::QueryTerms terms;
      terms.query_id = entry.query_id;
      const size_t n = query.documents.size();
      terms.coef.assign(n, 0.0);
      terms.coef_pos.assign(n, 0.0);
      terms.coef_neg.assign(n, 0.0);
      terms.omega0.resize(n);
      for (size_t i = 0; i < n; ++i) {
        terms.omega0[i] = std::max(query_stats.omega0[i], omega0_floor);
      }
      agg.queries.push_back(std::move(terms));
    }
    AggregatedLog::QueryTerms& terms = agg.queries[it->second];
    ++terms.interactions;

    PerInteractionFactors(kind, entry, query, query_stats, regression, assumed, g);
    for (size_t i = 0; i < g.size(); ++i) {
      terms.coef[i] += g[i];
      if (g[i] > 0.0) {
        terms.coef_pos[i] += g[i];
      } else if (g[i] < 0.0) {
        terms.coef_neg[i] += g[i];
      }
    }
  }
  const double inv_n = 1.0 / static_cast<double>(agg.num_interactions);
  for (auto& terms : agg.queries) {
    for (size_t i = 0; i < terms.coef.size(); ++i) {
      terms.coef[i] *= inv_n;
      terms.coef_pos[i] *= inv_n;
      terms.coef_neg[i] *= inv_n;
    }
  }
  return agg;
}

double EstimateFromAggregates(const PolicyParams& policy, const AggregatedLog& agg,
                              const QueryIndex& queries, const RankWeightFn& weight_fn,
                              int k, const EvalMode& mode) {
  double estimate = 0.0;
  for (const AggregatedLog::QueryTerms& terms : agg.queries) {
    EvalMode per_query = mode;
    if (!mode.exact) {
      per_query.seed =
          DeriveSeed(mode.seed, {kEstimateStream, static_cast<uint64_t>(terms.query_id)});
    }
    const std::vector<double> omega = ExpectedMetricWeights(
        policy, queries.at(terms.query_id), weight_fn, k, per_query);
    for (size_t i = 0; i < omega.size(); ++i) estimate += omega[i] * terms.coef[i];
  }
  return estimate;
}

double IpsPositionEstimate(const PolicyParams& policy, const ClickLog& log,
                           const QueryIndex& queries, const LoggingStats& stats,
                           const RankWeightFn& weight_fn, int k, const EvalMode& mode) {
  const AggregatedLog agg = AggregateEstimatorTerms(
      EstimatorKind::kIpsPosition, log, queries, stats, nullptr, nullptr, 0.0);
  return EstimateFromAggregates(policy, agg, queries, weight_fn, k, mode);
}

double IpsAffineEstimate(const PolicyParams& policy, const ClickLog& log,
                         const QueryIndex& queries, const LoggingStats& stats,
                         const RankWeightFn& weight_fn, int k, const EvalMode& mode) {
  const AggregatedLog agg = AggregateEstimatorTerms(
      EstimatorKind::kIpsAffine, log, queries, stats, nullptr, nullptr, 0.0);
  return EstimateFromAggregates(policy, agg, queries, weight_fn, k, mode);
}

double DoublyRobustEstimate(const PolicyParams& policy, const ClickLog& log,
                            const QueryIndex& queries, const LoggingStats& stats,
                            const RegressionModel& regression, const BiasParams& assumed,
                            const RankWeightFn& weight_fn, int k, const EvalMode& mode) {
  const AggregatedLog agg = AggregateEstimatorTerms(
      EstimatorKind::kDoublyRobust, log, queries, stats, &regression, &assumed, 0.0);
  return EstimateFromAggregates(policy, agg, queries, weight_fn, k, mode);
}

RatioReward RatioRewardDecomposition(EstimatorKind kind, const ClickLog& log,
                                     const QueryIndex& queries,
                                     const LoggingStats& stats,
                                     const RegressionModel* regression,
                                     const BiasParams* assumed,
                                     double omega0_floor) {
  if (log.entries.empty()) throw ArgumentError("empty click log");
  if (omega0_floor <= 0.0) {
    throw ArgumentError("the logging-weight floor must be positive");
  }
  RatioReward result;
  result.floor = omega0_floor;
  std::vector<double> g;
  for (long i = 0; i < log.N(); ++i) {
    const ClickLogEntry& entry = log.entries[static_cast<size_t>(i)];
    const Query& query = queries.at(entry.query_id);
    const QueryLoggingStats& query_stats = stats.at(entry.query_id);
    CheckStatsAlignment(query, query_stats);
    PerInteractionFactors(kind, entry, query, query_stats, regression, assumed, g);
    for (size_t d = 0; d < g.size(); ++d) {
      RatioRewardTerm term;
      term.interaction = i;
      term.query_id = entry.query_id;
      term.doc_id = query.documents[d].doc_id;
      term.denominator = std::max(query_stats.omega0[d], omega0_floor);
      term.reward = term.denominator * g[d];
      result.terms.push_back(term);
    }
  }
  return result;
}

}  // namespace ranksafe
