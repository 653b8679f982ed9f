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

#include "support/oracles.h"

#include <algorithm>
#include <cmath>

namespace ranksafe {
namespace testing {

Instance RandomInstance(Rng& rng, int max_docs, int feature_dim) {
  Instance instance;
  const int docs = 2 + static_cast<int>(rng.NextBelow(static_cast<uint64_t>(max_docs - 1)));
  instance.query.query_id = 1 + static_cast<int>(rng.NextBelow(1000));
  for (int d = 0; d < docs; ++d) {
    Document doc;
    doc.doc_id = d;
    doc.relevance_grade = static_cast<int>(rng.NextBelow(5));
    doc.features.resize(static_cast<size_t>(feature_dim));
    for (double& f : doc.features) f = rng.NextGaussian();
    instance.query.documents.push_back(std::move(doc));
  }
  instance.policy.temperature = 1.0;
  instance.logging.temperature = 1.0;
  instance.policy.weights.resize(static_cast<size_t>(feature_dim));
  instance.logging.weights.resize(static_cast<size_t>(feature_dim));
  for (double& w : instance.policy.weights) w = 0.7 * rng.NextGaussian();
  for (double& w : instance.logging.weights) w = 0.7 * rng.NextGaussian();
  return instance;
}

double ExpectedSingleInteractionValue(
    const Query& query, const PolicyParams& logging, ClickModelKind kind,
    const BiasParams& bias, int k,
    const std::function<double(const ClickLog&)>& value_of) {
  double expectation = 0.0;
  for (const auto& [ranking, ranking_prob] : EnumerateRankings(logging, query, k)) {
    const size_t shown = ranking.positions.size();
    std::vector<double> click_prob(shown);
    for (size_t j = 0; j < shown; ++j) {
      int grade = 0;
      for (const Document& doc : query.documents) {
        if (doc.doc_id == ranking.positions[j]) {
          grade = doc.relevance_grade;
          break;
        }
      }
      click_prob[j] = ClickProbability(kind, bias, static_cast<int>(j) + 1,
                                       RelevanceProbability(grade));
    }
    // Every click outcome, weighted by its Bernoulli probability.
    for (uint64_t mask = 0; mask < (1ULL << shown); ++mask) {
      double outcome_prob = 1.0;
      ClickLogEntry entry;
      entry.query_id = query.query_id;
      entry.presented = ranking;
      entry.clicks.resize(shown);
      for (size_t j = 0; j < shown; ++j) {
        const bool clicked = (mask >> j) & 1;
        entry.clicks[j] = clicked ? 1 : 0;
        outcome_prob *= clicked ? click_prob[j] : 1.0 - click_prob[j];
      }
      if (outcome_prob == 0.0) continue;
      ClickLog log;
      log.model = kind;
      log.k = k;
      log.entries.push_back(entry);
      expectation += ranking_prob * outcome_prob * value_of(log);
    }
  }
  return expectation;
}

double EnumeratedTrueUtility(const PolicyParams& policy, const Query& query,
                             const RankWeightFn& weight_fn, int k) {
  double utility = 0.0;
  for (const auto& [ranking, prob] : EnumerateRankings(policy, query, k)) {
    double value = 0.0;
    for (size_t j = 0; j < ranking.positions.size(); ++j) {
      for (const Document& doc : query.documents) {
        if (doc.doc_id == ranking.positions[j]) {
          value += weight_fn(static_cast<int>(j) + 1) *
                   RelevanceProbability(doc.relevance_grade);
          break;
        }
      }
    }
    utility += prob * value;
  }
  return utility;
}

std::vector<double> FiniteDifferenceGradient(
    const PolicyParams& params,
    const std::function<double(const PolicyParams&)>& f, double step) {
  std::vector<double> grad(params.weights.size());
  for (size_t i = 0; i < params.weights.size(); ++i) {
    const double h = step * std::max(1.0, std::fabs(params.weights[i]));
    PolicyParams plus = params;
    PolicyParams minus = params;
    plus.weights[i] += h;
    minus.weights[i] -= h;
    grad[i] = (f(plus) - f(minus)) / (2.0 * h);
  }
  return grad;
}

double MaxRelativeError(const std::vector<double>& got,
                        const std::vector<double>& want) {
  double scale = 1e-12;
  for (const double w : want) scale = std::max(scale, std::fabs(w));
  double worst = 0.0;
  for (size_t i = 0; i < got.size(); ++i) {
    worst = std::max(worst, std::fabs(got[i] - want[i]) /
                                std::max(scale, std::fabs(want[i])));
  }
  return worst;
}

}  // namespace testing
}  // namespace ranksafe
