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

#include "ranksafe/click_sim.h"

#include <fstream>
#include <sstream>

#include "ranksafe/errors.h"
#include "ranksafe/rng.h"

namespace ranksafe {
namespace {

constexpr uint64_t kInteractionStream = 0x636c6b73;

double TrustProbability(const BiasParams& bias, int rank, double rel_prob) {
  return bias.alpha[static_cast<size_t>(rank - 1)] * rel_prob +
         bias.beta[static_cast<size_t>(rank - 1)];
}

}  // namespace

BiasParams BiasParams::Default() {
  return BiasParams{{0.35, 0.53, 0.55, 0.54, 0.52},
                    {0.65, 0.26, 0.15, 0.11, 0.08}};
}

void ValidateBias(const BiasParams& bias) {
  if (bias.alpha.empty() || bias.alpha.size() != bias.beta.size()) {
    throw ArgumentError("bias alpha/beta must be nonempty and equally sized");
  }
  for (size_t i = 0; i < bias.alpha.size(); ++i) {
    if (bias.alpha[i] < 0.0 || bias.beta[i] < 0.0) {
      throw ArgumentError("bias parameters must be nonnegative");
    }
    if (bias.alpha[i] + bias.beta[i] > 1.0 + 1e-12) {
      throw ArgumentError("alpha_k + beta_k must not exceed 1 at rank " +
                          std::to_string(i + 1));
    }
  }
}

const char* ToString(ClickModelKind kind) {
  switch (kind) {
    case ClickModelKind::kPosition:
      return "position";
    case ClickModelKind::kTrust:
      return "trust";
    case ClickModelKind::kAdversarial:
      return "adversarial";
  }
  return "unknown";
}

ClickModelKind ParseClickModelKind(const std::string& name) {
  if (name == "position") return ClickModelKind::kPosition;
  if (name == "trust") return ClickModelKind::kTrust;
  if (name == "adversarial") return ClickModelKind::kAdversarial;
  throw ArgumentError("unknown click model '" + name +
                      "' (expected position|trust|adversarial)");
}

double ClickProbability(ClickModelKind kind, const BiasParams& bias, int rank,
                        double rel_prob) {
  if (rank < 1 || rank > bias.K()) {
    throw ArgumentError("rank " + std::to_string(rank) +
                        " outside the displayed top-" + std::to_string(bias.K()));
  }
  if (rel_prob < 0.0 || rel_prob > 1.0) {
    throw ArgumentError("relevance probability outside [0, 1]");
  }
  switch (kind) {
    case ClickModelKind::kPosition:
      return bias.alpha[static_cast<size_t>(rank - 1)] * rel_prob;
    case ClickModelKind::kTrust:
      return TrustProbability(bias, rank, rel_prob);
    case ClickModelKind::kAdversarial:
      // Exact complement of the trust model by construction.
      return 1.0 - TrustProbability(bias, rank, rel_prob);
  }
  throw InternalError("unhandled click model");
}

ClickLog Simulate(const PolicyParams& logging, const std::vector<Query>& queries,
                  ClickModelKind kind, const BiasParams& bias, int k,
                  long num_interactions, uint64_t seed) {
  if (num_interactions < 1) throw ArgumentError("need at least one interaction");
  if (queries.empty()) throw ArgumentError("need at least one query");
  ValidateBias(bias);
  if (k < 1 || k > bias.K()) {
    throw ArgumentError("k must lie in [1, K] with K = " + std::to_string(bias.K()));
  }

  ClickLog log;
  log.model = kind;
  log.k = k;
  log.entries.reserve(static_cast<size_t>(num_interactions));
  for (long i = 0; i < num_interactions; ++i) {
    Rng rng(DeriveSeed(seed, {kInteractionStream, static_cast<uint64_t>(i)}));
    const Query& query = queries[rng.NextBelow(queries.size())];
    ClickLogEntry entry;
    entry.query_id = query.query_id;
    entry.presented = SampleRanking(logging, query, k, rng);
    entry.clicks.resize(entry.presented.positions.size());
    for (size_t j = 0; j < entry.presented.positions.size(); ++j) {
      int grade = 0;
      for (const Document& doc : query.documents) {
        if (doc.doc_id == entry.presented.positions[j]) {
          grade = doc.relevance_grade;
          break;
        }
      }
      const double p = ClickProbability(kind, bias, static_cast<int>(j) + 1,
                                        RelevanceProbability(grade));
      entry.clicks[j] = rng.NextDouble() < p ? 1 : 0;
    }
    log.entries.push_back(std::move(entry));
  }
  return log;
}

void SaveClickLog(const ClickLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot write click log " + path);
  out << "# ranksafe-clicklog v1 model=" << ToString(log.model) << " k=" << log.k
      << "\n";
  for (const ClickLogEntry& entry : log.entries) {
    out << entry.query_id << '\t';
    for (size_t j = 0; j < entry.presented.positions.size(); ++j) {
      if (j > 0) out << ',';
      out << entry.presented.positions[j];
    }
    out << '\t';
    for (size_t j = 0; j < entry.clicks.size(); ++j) {
      if (j > 0) out << ',';
      out << static_cast<int>(entry.clicks[j]);
    }
    out << '\n';
  }
}

ClickLog LoadClickLog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open click log " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ranksafe-clicklog v1", 0) != 0) {
    throw ParseError("missing ranksafe-clicklog v1 header in " + path);
  }
  ClickLog log;
  {
    std::istringstream header(line);
    std::string token;
    while (header >> token) {
      if (token.rfind("model=", 0) == 0) log.model = ParseClickModelKind(token.substr(6));
      if (token.rfind("k=", 0) == 0) log.k = std::stoi(token.substr(2));
    }
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string qid_str, docs_str, clicks_str;
    if (!std::getline(fields, qid_str, '\t') || !std::getline(fields, docs_str, '\t') ||
        !std::getline(fields, clicks_str)) {
      throw ParseError("expected three tab-separated fields", line_no);
    }
    ClickLogEntry entry;
    try {
      entry.query_id = std::stoi(qid_str);
    } catch (const std::exception&) {
      throw ParseError("bad query id '" + qid_str + "'", line_no);
    }
    entry.presented.query_id = entry.query_id;
    std::istringstream docs(docs_str);
    std::string item;
    while (std::getline(docs, item, ',')) {
      entry.presented.positions.push_back(std::stoi(item));
    }
    std::istringstream clicks(clicks_str);
    while (std::getline(clicks, item, ',')) {
      if (item != "0" && item != "1") {
        throw ParseError("clicks must be 0 or 1", line_no);
      }
      entry.clicks.push_back(item == "1" ? 1 : 0);
    }
    if (entry.clicks.size() != entry.presented.positions.size()) {
      throw ParseError("clicks and doc ids have different lengths", line_no);
    }
    log.entries.push_back(std::move(entry));
  }
  return log;
}

}  // namespace ranksafe
