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

#include "ranksafe/logging_stats.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ranksafe/errors.h"
#include "ranksafe/rng.h"

namespace ranksafe {
namespace {

constexpr uint64_t kStatsStream = 0x70726f70;

QueryLoggingStats EstimateForQuery(const PolicyParams& logging, const Query& query,
                                   const BiasParams& bias, int k,
                                   const EvalMode& mode) {
  const size_t n = query.documents.size();
  QueryLoggingStats stats;
  stats.doc_ids.reserve(n);
  for (const Document& doc : query.documents) stats.doc_ids.push_back(doc.doc_id);
  stats.rho0.assign(n, 0.0);
  stats.omega0.assign(n, 0.0);

  const RankWeightFn alpha_at = [&bias, k](int rank) {
    return rank >= 1 && rank <= k ? bias.alpha[static_cast<size_t>(rank - 1)] : 0.0;
  };
  const RankWeightFn exposure_at = [&bias, k](int rank) {
    return rank >= 1 && rank <= k
               ? bias.alpha[static_cast<size_t>(rank - 1)] + bias.beta[static_cast<size_t>(rank - 1)]
               : 0.0;
  };

  if (mode.exact) {
    stats.rho0 = ExpectedMetricWeights(logging, query, alpha_at, k, mode);
    stats.omega0 = ExpectedMetricWeights(logging, query, exposure_at, k, mode);
    stats.samples = 0;
  } else {
    if (mode.samples < 1) throw ArgumentError("need >= 1 samples per query");
    EvalMode per_query = mode;
    per_query.seed = DeriveSeed(mode.seed, {kStatsStream, static_cast<uint64_t>(query.query_id)});
    // One pass of shared rankings for both quantities, so beta0 is an
    // exact difference even under sampling.
    Rng rng(per_query.seed);
    for (int s = 0; s < mode.samples; ++s) {
      const RankedList sample = SampleRanking(logging, query, k, rng);
      for (size_t j = 0; j < sample.positions.size(); ++j) {
        for (size_t i = 0; i < n; ++i) {
          if (query.documents[i].doc_id == sample.positions[j]) {
            stats.rho0[i] += bias.alpha[j];
            stats.omega0[i] += bias.alpha[j] + bias.beta[j];
            break;
          }
        }
      }
    }
    for (size_t i = 0; i < n; ++i) {
      stats.rho0[i] /= static_cast<double>(mode.samples);
      stats.omega0[i] /= static_cast<double>(mode.samples);
    }
    stats.samples = mode.samples;
  }

  stats.beta0.resize(n);
  for (size_t i = 0; i < n; ++i) stats.beta0[i] = stats.omega0[i] - stats.rho0[i];
  return stats;
}

}  // namespace

const QueryLoggingStats& LoggingStats::at(int query_id) const {
  const QueryLoggingStats* stats = find(query_id);
  if (stats == nullptr) {
    throw ArgumentError("no logging stats for query " + std::to_string(query_id));
  }
  return *stats;
}

const QueryLoggingStats* LoggingStats::find(int query_id) const {
  const auto it = by_query.find(query_id);
  return it == by_query.end() ? nullptr : &it->second;
}

LoggingStats EstimateLoggingStats(const PolicyParams& logging,
                                  const std::vector<Query>& queries,
                                  const BiasParams& bias, int k,
                                  const EvalMode& mode) {
  ValidateBias(bias);
  if (k < 1 || k > bias.K()) {
    throw ArgumentError("k must lie in [1, K] with K = " + std::to_string(bias.K()));
  }
  LoggingStats stats;
  stats.by_query.reserve(queries.size());
  for (const Query& query : queries) {
    stats.by_query.emplace(query.query_id,
                           EstimateForQuery(logging, query, bias, k, mode));
  }
  return stats;
}

LoggingStats ClipPropensities(const LoggingStats& stats, long num_interactions) {
  if (num_interactions < 1) throw ArgumentError("N must be >= 1");
  const double floor = PropensityClipThreshold(num_interactions);
  LoggingStats clipped = stats;
  for (auto& [qid, query_stats] : clipped.by_query) {
    for (double& rho : query_stats.rho0) rho = std::max(rho, floor);
  }
  return clipped;
}

void SaveLoggingStats(const LoggingStats& stats, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot write stats table " + path);
  out << "qid, doc_id, rho0, omega0, count\n";
  std::vector<int> qids;
  qids.reserve(stats.by_query.size());
  for (const auto& [qid, unused] : stats.by_query) qids.push_back(qid);
  std::sort(qids.begin(), qids.end());
  char buf[64];
  for (const int qid : qids) {
    const QueryLoggingStats& qs = stats.by_query.at(qid);
    for (size_t i = 0; i < qs.doc_ids.size(); ++i) {
      out << qid << ", " << qs.doc_ids[i];
      std::snprintf(buf, sizeof(buf), "%.17g", qs.rho0[i]);
      out << ", " << buf;
      std::snprintf(buf, sizeof(buf), "%.17g", qs.omega0[i]);
      out << ", " << buf << ", " << qs.samples << "\n";
    }
  }
}

LoggingStats LoadLoggingStats(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open stats table " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("qid, doc_id", 0) != 0) {
    throw ParseError("missing stats table header in " + path);
  }
  LoggingStats stats;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string token;
    int qid = 0, doc_id = 0;
    double rho = 0.0, omega = 0.0;
    long count = 0;
    try {
      std::getline(fields, token, ',');
      qid = std::stoi(token);
      std::getline(fields, token, ',');
      doc_id = std::stoi(token);
      std::getline(fields, token, ',');
      rho = std::stod(token);
      std::getline(fields, token, ',');
      omega = std::stod(token);
      std::getline(fields, token);
      count = std::stol(token);
    } catch (const std::exception&) {
      throw ParseError("bad stats row", line_no);
    }
    QueryLoggingStats& qs = stats.by_query[qid];
    qs.doc_ids.push_back(doc_id);
    qs.rho0.push_back(rho);
    qs.omega0.push_back(omega);
    qs.beta0.push_back(omega - rho);
    qs.samples = count;
  }
  return stats;
}

}  // namespace ranksafe
