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

#include "ranksafe/prpo.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "ranksafe/errors.h"
#include "ranksafe/rng.h"

namespace ranksafe {
namespace {

constexpr uint64_t kPrpoStream = 0x7072706f;

}  // namespace

void ValidateClipRange(const ClipRange& range) {
  if (!(range.eps_minus > 0.0) || range.eps_minus > 1.0) {
    throw ArgumentError("eps_minus must lie in (0, 1]");
  }
  if (range.eps_plus < 1.0) throw ArgumentError("eps_plus must be >= 1");
}

double ClipWeight(double x, const ClipRange& range, double r) {
  return r >= 0.0 ? std::min(x, range.eps_plus) * r
                  : std::max(x, range.eps_minus) * r;
}

double PrpoGradientFactor(double x, const ClipRange& range, double r) {
  if (r > 0.0) return x <= range.eps_plus ? r : 0.0;
  if (r < 0.0) return x >= range.eps_minus ? r : 0.0;
  return 0.0;
}

double PrpoObjective(const std::vector<double>& ratios,
                     const std::vector<double>& rewards, const ClipRange& range) {
  if (ratios.size() != rewards.size()) {
    throw ArgumentError("ratios and rewards have different lengths");
  }
  double objective = 0.0;
  for (size_t t = 0; t < ratios.size(); ++t) {
    objective += ClipWeight(ratios[t], range, rewards[t]);
  }
  return objective;
}

ClipSchedule ClipSchedule::Static(double delta) {
  if (!(delta > 0.0)) throw ArgumentError("static clip delta must be positive");
  ClipSchedule schedule;
  schedule.kind_ = Kind::kStatic;
  schedule.value_ = delta;
  return schedule;
}

ClipSchedule ClipSchedule::OverN(double numerator) {
  if (!(numerator > 0.0)) throw ArgumentError("the c/N numerator must be positive");
  ClipSchedule schedule;
  schedule.kind_ = Kind::kOverN;
  schedule.value_ = numerator;
  return schedule;
}

ClipSchedule ClipSchedule::InverseLogN() {
  ClipSchedule schedule;
  schedule.kind_ = Kind::kInverseLogN;
  schedule.value_ = 1.0;
  return schedule;
}

ClipSchedule ClipSchedule::Parse(const std::string& text) {
  if (text == "1/log(N)") return InverseLogN();
  if (text.rfind("const:", 0) == 0) {
    try {
      return Static(std::stod(text.substr(6)));
    } catch (const std::invalid_argument&) {
      throw ArgumentError("bad clip schedule '" + text + "'");
    }
  }
  const size_t slash = text.find("/N");
  if (slash != std::string::npos && slash + 2 == text.size()) {
    try {
      return OverN(std::stod(text.substr(0, slash)));
    } catch (const std::invalid_argument&) {
      throw ArgumentError("bad clip schedule '" + text + "'");
    }
  }
  throw ArgumentError("unknown clip schedule '" + text +
                      "' (expected const:<v>, <c>/N, or 1/log(N))");
}

double ClipSchedule::DeltaAt(long num_interactions) const {
  if (num_interactions < 1) throw ArgumentError("N must be >= 1");
  switch (kind_) {
    case Kind::kStatic:
      return value_;
    case Kind::kOverN:
      return value_ / static_cast<double>(num_interactions);
    case Kind::kInverseLogN: {
      const double log_n = std::log(static_cast<double>(num_interactions));
      return log_n > 0.0 ? 1.0 / log_n : std::numeric_limits<double>::infinity();
    }
  }
  throw InternalError("unhandled clip schedule kind");
}

std::string ClipSchedule::ToString() const {
  char buf[64];
  switch (kind_) {
    case Kind::kStatic:
      std::snprintf(buf, sizeof(buf), "const:%g", value_);
      return buf;
    case Kind::kOverN:
      std::snprintf(buf, sizeof(buf), "%g/N", value_);
      return buf;
    case Kind::kInverseLogN:
      return "1/log(N)";
  }
  return "unknown";
}

ClipRange ResolveClipRange(const ClipSchedule& schedule, long num_interactions) {
  double delta = schedule.DeltaAt(num_interactions);
  if (!(delta > 0.0)) throw ArgumentError("clip delta must be positive");
  delta = std::min(delta, 1.0);
  return ClipRange{delta, 1.0 / delta};
}

std::vector<double> PrpoGradient(const PolicyParams& policy,
                                 const QueryIndex& queries,
                                 const AggregatedLog& agg, const ClipRange& range,
                                 const RankWeightFn& weight_fn, int k,
                                 const EvalMode& mode) {
  ValidateClipRange(range);
  const size_t dim = policy.weights.size();
  std::vector<double> gradient(dim, 0.0);
  std::vector<double> coef;
  for (const AggregatedLog::QueryTerms& terms : agg.queries) {
    const Query& query = queries.at(terms.query_id);
    EvalMode per_query = mode;
    if (!mode.exact) {
      per_query.seed =
          DeriveSeed(mode.seed, {kPrpoStream, static_cast<uint64_t>(terms.query_id)});
    }

    std::vector<RankedList> rankings;
    std::vector<double> omega;
    if (mode.exact) {
      omega = ExpectedMetricWeights(policy, query, weight_fn, k, per_query);
    } else {
      rankings = SampleRankings(policy, query, k, per_query.samples, per_query.seed);
      omega = MeanWeights(query, rankings, weight_fn);
    }

    // Indicator-gated per-document coefficients: rewards share the sign of
    // the aggregated factors, so positive mass pushes a document only
    // while its ratio is at most eps_plus and negative mass only while it
    // is at least eps_minus.
    coef.assign(omega.size(), 0.0);
    bool any = false;
    for (size_t i = 0; i < omega.size(); ++i) {
      const double ratio = omega[i] / terms.omega0[i];
      if (ratio <= range.eps_plus) coef[i] += terms.coef_pos[i];
      if (ratio >= range.eps_minus) coef[i] += terms.coef_neg[i];
      any = any || coef[i] != 0.0;
    }
    if (!any) continue;

    if (mode.exact) {
      const std::vector<std::vector<double>> omega_grad =
          ExpectedMetricWeightGradients(policy, query, weight_fn, k, per_query.cap);
      for (size_t i = 0; i < omega.size(); ++i) {
        if (coef[i] == 0.0) continue;
        for (size_t f = 0; f < dim; ++f) gradient[f] += omega_grad[i][f] * coef[i];
      }
    } else {
      const std::vector<double> g = ReturnGradientFromRankings(
          policy, query, rankings, coef, weight_fn, /*baseline=*/true);
      for (size_t f = 0; f < dim; ++f) gradient[f] += g[f];
    }
  }
  return gradient;
}

double PrpoAggregateObjective(const PolicyParams& policy, const QueryIndex& queries,
                              const AggregatedLog& agg, const ClipRange& range,
                              const RankWeightFn& weight_fn, int k,
                              const EvalMode& mode) {
  ValidateClipRange(range);
  double objective = 0.0;
  for (const AggregatedLog::QueryTerms& terms : agg.queries) {
    const Query& query = queries.at(terms.query_id);
    EvalMode per_query = mode;
    if (!mode.exact) {
      per_query.seed =
          DeriveSeed(mode.seed, {kPrpoStream, static_cast<uint64_t>(terms.query_id)});
    }
    const std::vector<double> omega =
        mode.exact
            ? ExpectedMetricWeights(policy, query, weight_fn, k, per_query)
            : MeanWeights(query,
                          SampleRankings(policy, query, k, per_query.samples,
                                         per_query.seed),
                          weight_fn);
    for (size_t i = 0; i < omega.size(); ++i) {
      const double ratio = omega[i] / terms.omega0[i];
      objective += std::min(ratio, range.eps_plus) * terms.omega0[i] * terms.coef_pos[i];
      objective += std::max(ratio, range.eps_minus) * terms.omega0[i] * terms.coef_neg[i];
    }
  }
  return objective;
}

bool VerifySafetyTheorem(const Query& query, const RankedList& logging_ranking,
                         const std::vector<double>& rewards,
                         const RankWeightFn& weight_fn, int k, long cap) {
  if (rewards.size() != logging_ranking.positions.size()) {
    throw ArgumentError("need one reward per presented document");
  }
  for (const double r : rewards) {
    if (r == 0.0) {
      throw ArgumentError("the ratio-one safety property assumes every "
                          "presented document has a nonzero reward");
    }
  }
  const ClipRange unit{1.0, 1.0};

  std::vector<double> omega0;
  omega0.reserve(rewards.size());
  for (size_t j = 0; j < logging_ranking.positions.size(); ++j) {
    const double w = weight_fn(static_cast<int>(j) + 1);
    if (!(w > 0.0)) {
      throw ArgumentError("metric weight must be positive over the presented ranks");
    }
    omega0.push_back(w);
  }

  // Enumerate candidate rankings through a uniform policy; only the list
  // of rankings matters here.
  const size_t dim = query.documents.empty() ? 0 : query.documents.front().features.size();
  const PolicyParams uniform{std::vector<double>(dim, 0.0), 1.0};
  const auto candidates = EnumerateRankings(uniform, query, k, cap);

  auto objective_of = [&](const RankedList& candidate) {
    double objective = 0.0;
    for (size_t j = 0; j < logging_ranking.positions.size(); ++j) {
      const int doc_id = logging_ranking.positions[j];
      double weight = 0.0;  // documents pushed out of the top-k earn nothing
      for (size_t pos = 0; pos < candidate.positions.size(); ++pos) {
        if (candidate.positions[pos] == doc_id) {
          weight = weight_fn(static_cast<int>(pos) + 1);
          break;
        }
      }
      objective += ClipWeight(weight / omega0[j], unit, rewards[j]);
    }
    return objective;
  };

  const double logging_value = objective_of(logging_ranking);
  double best = logging_value;
  for (const auto& [candidate, prob] : candidates) {
    best = std::max(best, objective_of(candidate));
  }
  return logging_value >= best - 1e-9 * std::max(1.0, std::fabs(best));
}

}  // namespace ranksafe
