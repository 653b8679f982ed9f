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

#include "ranksafe/policy.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "ranksafe/errors.h"

namespace ranksafe {
namespace {

void CheckDims(const PolicyParams& params, const Query& query) {
  for (const Document& doc : query.documents) {
    if (doc.features.size() != params.weights.size()) {
      throw ArgumentError("feature dimensionality mismatch in query " +
                          std::to_string(query.query_id) + ": policy has " +
                          std::to_string(params.weights.size()) + ", doc has " +
                          std::to_string(doc.features.size()));
    }
  }
}

int EffectiveK(const Query& query, int k) {
  return std::min<int>(k, static_cast<int>(query.documents.size()));
}

double LogSumExp(const std::vector<double>& scores, const int* idx, int count) {
  double max = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < count; ++i) max = std::max(max, scores[static_cast<size_t>(idx[i])]);
  double sum = 0.0;
  for (int i = 0; i < count; ++i) sum += std::exp(scores[static_cast<size_t>(idx[i])] - max);
  return max + std::log(sum);
}

// Maps ranking doc_ids to document indices, validating membership,
// distinctness, and length.
std::vector<int> RankingIndices(const Query& query, const RankedList& ranking) {
  std::vector<int> indices;
  indices.reserve(ranking.positions.size());
  std::vector<bool> used(query.documents.size(), false);
  for (const int doc_id : ranking.positions) {
    int found = -1;
    for (size_t i = 0; i < query.documents.size(); ++i) {
      if (query.documents[i].doc_id == doc_id) {
        found = static_cast<int>(i);
        break;
      }
    }
    if (found < 0) {
      throw ArgumentError("ranking references doc_id " + std::to_string(doc_id) +
                          " absent from query " + std::to_string(query.query_id));
    }
    if (used[static_cast<size_t>(found)]) {
      throw ArgumentError("ranking repeats doc_id " + std::to_string(doc_id));
    }
    used[static_cast<size_t>(found)] = true;
    indices.push_back(found);
  }
  return indices;
}

// Shared DFS for the exact paths. At every prefix node the visitor sees
// the prefix probability, the next depth (0-based), and the branch
// probabilities over the remaining documents (order[depth..n)).
template <typename Visit>
void PrefixDfs(const std::vector<double>& scores, int k, std::vector<int>& order,
               int depth, double prefix_prob, const Visit& visit) {
  const int n = static_cast<int>(order.size());
  if (depth >= k) return;
  const int remaining = n - depth;
  double max = -std::numeric_limits<double>::infinity();
  for (int i = depth; i < n; ++i) max = std::max(max, scores[static_cast<size_t>(order[static_cast<size_t>(i)])]);
  double total = 0.0;
  std::vector<double> expo(static_cast<size_t>(remaining));
  for (int i = depth; i < n; ++i) {
    expo[static_cast<size_t>(i - depth)] = std::exp(scores[static_cast<size_t>(order[static_cast<size_t>(i)])] - max);
    total += expo[static_cast<size_t>(i - depth)];
  }
  for (int i = depth; i < n; ++i) {
    const double p = expo[static_cast<size_t>(i - depth)] / total;
    std::swap(order[static_cast<size_t>(depth)], order[static_cast<size_t>(i)]);
    visit(order, depth, prefix_prob * p);
    PrefixDfs(scores, k, order, depth + 1, prefix_prob * p, visit);
    std::swap(order[static_cast<size_t>(depth)], order[static_cast<size_t>(i)]);
  }
}

void RequireEnumerable(const Query& query, int k, long cap) {
  const int n = static_cast<int>(query.documents.size());
  if (CountRankings(n, EffectiveK(query, k), cap) < 0) {
    throw SizeError("query " + std::to_string(query.query_id) + " has more than " +
                    std::to_string(cap) + " rankings; exact mode refused");
  }
}

}  // namespace

RankWeightFn DcgWeight(int k) {
  return [k](int rank) {
    return rank >= 1 && rank <= k ? 1.0 / std::log2(static_cast<double>(rank) + 1.0) : 0.0;
  };
}

long CountRankings(int num_docs, int k, long cap) {
  long count = 1;
  for (int i = 0; i < k; ++i) {
    count *= (num_docs - i);
    if (count > cap) return -1;
  }
  return count;
}

std::vector<double> Score(const PolicyParams& params, const Query& query) {
  if (params.temperature <= 0.0) {
    throw ArgumentError("policy temperature must be positive");
  }
  CheckDims(params, query);
  std::vector<double> scores;
  scores.reserve(query.documents.size());
  for (const Document& doc : query.documents) {
    double s = 0.0;
    for (size_t f = 0; f < doc.features.size(); ++f) {
      s += params.weights[f] * doc.features[f];
    }
    scores.push_back(s / params.temperature);
  }
  return scores;
}

RankedList SampleRanking(const PolicyParams& params, const Query& query, int k,
                         Rng& rng) {
  if (k < 1) throw ArgumentError("k must be >= 1");
  if (query.documents.empty()) {
    throw ArgumentError("cannot sample a ranking for an empty query");
  }
  const std::vector<double> scores = Score(params, query);
  const int n = static_cast<int>(scores.size());
  const int kk = EffectiveK(query, k);

  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  RankedList result;
  result.query_id = query.query_id;
  result.positions.reserve(static_cast<size_t>(kk));
  std::vector<double> expo(static_cast<size_t>(n));
  for (int j = 0; j < kk; ++j) {
    double max = -std::numeric_limits<double>::infinity();
    for (int i = j; i < n; ++i) max = std::max(max, scores[static_cast<size_t>(order[static_cast<size_t>(i)])]);
    double total = 0.0;
    for (int i = j; i < n; ++i) {
      expo[static_cast<size_t>(i)] = std::exp(scores[static_cast<size_t>(order[static_cast<size_t>(i)])] - max);
      total += expo[static_cast<size_t>(i)];
    }
    const double u = rng.NextDouble() * total;
    double cumulative = 0.0;
    int pick = n - 1;
    for (int i = j; i < n; ++i) {
      cumulative += expo[static_cast<size_t>(i)];
      if (u < cumulative) {
        pick = i;
        break;
      }
    }
    std::swap(order[static_cast<size_t>(j)], order[static_cast<size_t>(pick)]);
    result.positions.push_back(query.documents[static_cast<size_t>(order[static_cast<size_t>(j)])].doc_id);
  }
  return result;
}

RankedList RankByScore(const PolicyParams& params, const Query& query, int k) {
  const std::vector<double> scores = Score(params, query);
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores[static_cast<size_t>(a)] != scores[static_cast<size_t>(b)]) {
      return scores[static_cast<size_t>(a)] > scores[static_cast<size_t>(b)];
    }
    return query.documents[static_cast<size_t>(a)].doc_id < query.documents[static_cast<size_t>(b)].doc_id;
  });
  RankedList result;
  result.query_id = query.query_id;
  const int kk = EffectiveK(query, k);
  for (int j = 0; j < kk; ++j) {
    result.positions.push_back(query.documents[static_cast<size_t>(order[static_cast<size_t>(j)])].doc_id);
  }
  return result;
}

double RankingLogProb(const PolicyParams& params, const Query& query,
                      const RankedList& ranking) {
  const std::vector<double> scores = Score(params, query);
  const std::vector<int> placed = RankingIndices(query, ranking);
  const int n = static_cast<int>(scores.size());

  std::vector<int> remaining(static_cast<size_t>(n));
  std::iota(remaining.begin(), remaining.end(), 0);
  double log_prob = 0.0;
  for (const int idx : placed) {
    log_prob += scores[static_cast<size_t>(idx)] -
                LogSumExp(scores, remaining.data(), static_cast<int>(remaining.size()));
    remaining.erase(std::find(remaining.begin(), remaining.end(), idx));
  }
  return log_prob;
}

std::vector<double> GradLogProb(const PolicyParams& params, const Query& query,
                                const RankedList& ranking) {
  const std::vector<double> scores = Score(params, query);
  const std::vector<int> placed = RankingIndices(query, ranking);
  const int n = static_cast<int>(scores.size());
  const size_t dim = params.weights.size();

  std::vector<double> grad(dim, 0.0);
  std::vector<int> remaining(static_cast<size_t>(n));
  std::iota(remaining.begin(), remaining.end(), 0);
  for (const int idx : placed) {
    double max = -std::numeric_limits<double>::infinity();
    for (const int r : remaining) max = std::max(max, scores[static_cast<size_t>(r)]);
    double total = 0.0;
    for (const int r : remaining) total += std::exp(scores[static_cast<size_t>(r)] - max);
    const std::vector<double>& x = query.documents[static_cast<size_t>(idx)].features;
    for (size_t f = 0; f < dim; ++f) grad[f] += x[f];
    for (const int r : remaining) {
      const double p = std::exp(scores[static_cast<size_t>(r)] - max) / total;
      const std::vector<double>& xr = query.documents[static_cast<size_t>(r)].features;
      for (size_t f = 0; f < dim; ++f) grad[f] -= p * xr[f];
    }
    remaining.erase(std::find(remaining.begin(), remaining.end(), idx));
  }
  for (size_t f = 0; f < dim; ++f) grad[f] /= params.temperature;
  return grad;
}

std::vector<std::pair<RankedList, double>> EnumerateRankings(
    const PolicyParams& params, const Query& query, int k, long cap) {
  RequireEnumerable(query, k, cap);
  const std::vector<double> scores = Score(params, query);
  const int n = static_cast<int>(scores.size());
  const int kk = EffectiveK(query, k);

  std::vector<std::pair<RankedList, double>> result;
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  PrefixDfs(scores, kk, order, 0, 1.0,
            [&](const std::vector<int>& prefix, int depth, double prob) {
              if (depth + 1 != kk) return;
              RankedList ranking;
              ranking.query_id = query.query_id;
              ranking.positions.reserve(static_cast<size_t>(kk));
              for (int j = 0; j < kk; ++j) {
                ranking.positions.push_back(
                    query.documents[static_cast<size_t>(prefix[static_cast<size_t>(j)])].doc_id);
              }
              result.emplace_back(std::move(ranking), prob);
            });
  return result;
}

std::vector<double> ExpectedMetricWeights(const PolicyParams& params,
                                          const Query& query,
                                          const RankWeightFn& weight_fn, int k,
                                          const EvalMode& mode) {
  const int n = static_cast<int>(query.documents.size());
  const int kk = EffectiveK(query, k);
  std::vector<double> omega(static_cast<size_t>(n), 0.0);

  if (mode.exact) {
    RequireEnumerable(query, k, mode.cap);
    const std::vector<double> scores = Score(params, query);
    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    // Once a document is placed its weight no longer depends on the
    // suffix, so prefix probabilities are enough.
    PrefixDfs(scores, kk, order, 0, 1.0,
              [&](const std::vector<int>& prefix, int depth, double prob) {
                omega[static_cast<size_t>(prefix[static_cast<size_t>(depth)])] +=
                    prob * weight_fn(depth + 1);
              });
    return omega;
  }

  if (mode.samples < 1) throw ArgumentError("sampled mode needs >= 1 samples");
  Rng rng(mode.seed);
  for (int s = 0; s < mode.samples; ++s) {
    const RankedList sample = SampleRanking(params, query, k, rng);
    for (size_t j = 0; j < sample.positions.size(); ++j) {
      // Positions come straight from this query, so a linear scan is enough.
      for (size_t i = 0; i < query.documents.size(); ++i) {
        if (query.documents[i].doc_id == sample.positions[j]) {
          omega[i] += weight_fn(static_cast<int>(j) + 1);
          break;
        }
      }
    }
  }
  for (double& w : omega) w /= static_cast<double>(mode.samples);
  return omega;
}

std::vector<std::vector<double>> ExpectedMetricWeightGradients(
    const PolicyParams& params, const Query& query,
    const RankWeightFn& weight_fn, int k, long cap) {
  const int n = static_cast<int>(query.documents.size());
  const size_t dim = params.weights.size();
  std::vector<std::vector<double>> grads(static_cast<size_t>(n),
                                         std::vector<double>(dim, 0.0));
  for (const auto& [ranking, prob] : EnumerateRankings(params, query, k, cap)) {
    const std::vector<double> g = GradLogProb(params, query, ranking);
    for (size_t j = 0; j < ranking.positions.size(); ++j) {
      const double w = weight_fn(static_cast<int>(j) + 1);
      if (w == 0.0) continue;
      for (size_t i = 0; i < query.documents.size(); ++i) {
        if (query.documents[i].doc_id == ranking.positions[j]) {
          for (size_t f = 0; f < dim; ++f) grads[i][f] += prob * w * g[f];
          break;
        }
      }
    }
  }
  return grads;
}

std::vector<double> PerDocReturnGradient(const PolicyParams& params,
                                         const Query& query,
                                         const std::vector<double>& coef,
                                         const RankWeightFn& weight_fn, int k,
                                         const EvalMode& mode, bool baseline) {
  if (coef.size() != query.documents.size()) {
    throw ArgumentError("coefficient vector does not match the document count");
  }
  const size_t dim = params.weights.size();
  std::vector<double> grad(dim, 0.0);

  if (mode.exact) {
    for (const auto& [ranking, prob] : EnumerateRankings(params, query, k, mode.cap)) {
      double ret = 0.0;
      for (size_t j = 0; j < ranking.positions.size(); ++j) {
        for (size_t i = 0; i < query.documents.size(); ++i) {
          if (query.documents[i].doc_id == ranking.positions[j]) {
            ret += coef[i] * weight_fn(static_cast<int>(j) + 1);
            break;
          }
        }
      }
      if (ret == 0.0) continue;
      const std::vector<double> g = GradLogProb(params, query, ranking);
      for (size_t f = 0; f < dim; ++f) grad[f] += prob * ret * g[f];
    }
    return grad;
  }

  if (baseline && mode.samples < 2) {
    throw ArgumentError("the per-query control variate needs >= 2 samples");
  }
  if (mode.samples < 1) throw ArgumentError("sampled mode needs >= 1 samples");
  const std::vector<RankedList> samples =
      SampleRankings(params, query, k, mode.samples, mode.seed);
  return ReturnGradientFromRankings(params, query, samples, coef, weight_fn,
                                    baseline);
}

std::vector<RankedList> SampleRankings(const PolicyParams& params,
                                       const Query& query, int k, int samples,
                                       uint64_t seed) {
  if (samples < 1) throw ArgumentError("need >= 1 samples");
  Rng rng(seed);
  std::vector<RankedList> result;
  result.reserve(static_cast<size_t>(samples));
  for (int s = 0; s < samples; ++s) {
    result.push_back(SampleRanking(params, query, k, rng));
  }
  return result;
}

std::vector<double> MeanWeights(const Query& query,
                                const std::vector<RankedList>& rankings,
                                const RankWeightFn& weight_fn) {
  if (rankings.empty()) throw ArgumentError("need >= 1 rankings");
  std::vector<double> mean(query.documents.size(), 0.0);
  for (const RankedList& y : rankings) {
    for (size_t j = 0; j < y.positions.size(); ++j) {
      for (size_t i = 0; i < query.documents.size(); ++i) {
        if (query.documents[i].doc_id == y.positions[j]) {
          mean[i] += weight_fn(static_cast<int>(j) + 1);
          break;
        }
      }
    }
  }
  for (double& w : mean) w /= static_cast<double>(rankings.size());
  return mean;
}

std::vector<double> ReturnGradientFromRankings(
    const PolicyParams& params, const Query& query,
    const std::vector<RankedList>& rankings, const std::vector<double>& coef,
    const RankWeightFn& weight_fn, bool baseline) {
  if (coef.size() != query.documents.size()) {
    throw ArgumentError("coefficient vector does not match the document count");
  }
  const size_t dim = params.weights.size();
  std::vector<double> grad(dim, 0.0);
  const size_t count = rankings.size();
  std::vector<double> returns(count, 0.0);
  for (size_t s = 0; s < count; ++s) {
    const RankedList& y = rankings[s];
    for (size_t j = 0; j < y.positions.size(); ++j) {
      for (size_t i = 0; i < query.documents.size(); ++i) {
        if (query.documents[i].doc_id == y.positions[j]) {
          returns[s] += coef[i] * weight_fn(static_cast<int>(j) + 1);
          break;
        }
      }
    }
  }
  double mean = 0.0;
  if (baseline) {
    for (const double r : returns) mean += r;
    mean /= static_cast<double>(count);
  }
  for (size_t s = 0; s < count; ++s) {
    const double advantage = returns[s] - mean;
    if (advantage == 0.0) continue;
    const std::vector<double> g = GradLogProb(params, query, rankings[s]);
    for (size_t f = 0; f < dim; ++f) {
      grad[f] += advantage * g[f] / static_cast<double>(count);
    }
  }
  return grad;
}

void SavePolicy(const PolicyParams& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot write policy file " + path);
  char buf[64];
  out << "ranksafe-policy v1\n";
  out << "dim " << params.weights.size() << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", params.temperature);
  out << "temperature " << buf << "\n";
  out << "weights";
  for (const double w : params.weights) {
    std::snprintf(buf, sizeof(buf), "%.17g", w);
    out << ' ' << buf;
  }
  out << "\n";
}

PolicyParams LoadPolicy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open policy file " + path);
  std::string magic, version, key;
  in >> magic >> version;
  if (magic != "ranksafe-policy" || version != "v1") {
    throw ParseError("not a ranksafe-policy v1 file: " + path);
  }
  size_t dim = 0;
  PolicyParams params;
  in >> key >> dim;
  if (key != "dim") throw ParseError("expected 'dim' in " + path);
  in >> key >> params.temperature;
  if (key != "temperature") throw ParseError("expected 'temperature' in " + path);
  in >> key;
  if (key != "weights") throw ParseError("expected 'weights' in " + path);
  params.weights.resize(dim);
  for (double& w : params.weights) {
    if (!(in >> w)) throw ParseError("truncated weight vector in " + path);
  }
  return params;
}

uint64_t HashPolicy(const PolicyParams& params) {
  uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  mix(params.temperature);
  for (const double w : params.weights) mix(w);
  return h;
}

}  // namespace ranksafe
