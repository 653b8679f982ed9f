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

#include "ranksafe/dataset.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "ranksafe/errors.h"
#include "ranksafe/rng.h"

namespace ranksafe {
namespace {

constexpr uint64_t kFeatureStream = 0x66656174;  // stream tags
constexpr uint64_t kGradeStream = 0x67726164;
constexpr uint64_t kHiddenWeightStream = 0x77737461;
constexpr uint64_t kSubsetStream = 0x73756273;

bool ParseInt(const std::string& token, long& out) {
  if (token.empty()) return false;
  char* end = nullptr;
  out = std::strtol(token.c_str(), &end, 10);
  return end == token.c_str() + token.size();
}

bool ParseDouble(const std::string& token, double& out) {
  if (token.empty()) return false;
  char* end = nullptr;
  out = std::strtod(token.c_str(), &end);
  return end == token.c_str() + token.size();
}

}  // namespace

ParsedQueries ParseSvmlight(std::istream& in) {
  ParsedQueries result;
  std::unordered_map<int, size_t> query_pos;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const size_t hash = line.find('#'); hash != std::string::npos) {
      line.resize(hash);
    }
    std::istringstream tokens(line);
    std::string token;
    if (!(tokens >> token)) continue;  // blank or comment-only line

    long grade = 0;
    if (!ParseInt(token, grade) || grade < 0 || grade > kMaxRelevanceGrade) {
      throw ParseError("bad relevance grade '" + token + "'", line_no);
    }
    if (!(tokens >> token) || token.rfind("qid:", 0) != 0) {
      throw ParseError("expected qid:<id> after the grade", line_no);
    }
    long qid = 0;
    if (!ParseInt(token.substr(4), qid)) {
      throw ParseError("bad query id '" + token + "'", line_no);
    }

    Document doc;
    doc.relevance_grade = static_cast<int>(grade);
    long prev_index = 0;
    while (tokens >> token) {
      const size_t colon = token.find(':');
      if (colon == std::string::npos) {
        throw ParseError("expected <index>:<value>, got '" + token + "'", line_no);
      }
      long index = 0;
      double value = 0.0;
      if (!ParseInt(token.substr(0, colon), index) || index < 1) {
        throw ParseError("bad feature index in '" + token + "'", line_no);
      }
      if (index <= prev_index) {
        throw ParseError("feature indices must be strictly increasing", line_no);
      }
      if (!ParseDouble(token.substr(colon + 1), value)) {
        throw ParseError("bad feature value in '" + token + "'", line_no);
      }
      doc.features.resize(static_cast<size_t>(index), 0.0);
      doc.features[static_cast<size_t>(index - 1)] = value;
      prev_index = index;
    }
    result.feature_dim =
        std::max(result.feature_dim, static_cast<int>(prev_index));

    auto [it, inserted] =
        query_pos.try_emplace(static_cast<int>(qid), result.queries.size());
    if (inserted) {
      result.queries.push_back(Query{static_cast<int>(qid), {}});
    }
    Query& query = result.queries[it->second];
    doc.doc_id = static_cast<int>(query.documents.size());
    query.documents.push_back(std::move(doc));
  }
  for (Query& query : result.queries) {
    for (Document& doc : query.documents) {
      doc.features.resize(static_cast<size_t>(result.feature_dim), 0.0);
    }
  }
  return result;
}

void WriteSvmlight(const std::vector<Query>& queries, int feature_dim,
                   std::ostream& out) {
  char buf[64];
  for (const Query& query : queries) {
    for (const Document& doc : query.documents) {
      out << doc.relevance_grade << " qid:" << query.query_id;
      for (int i = 0; i < feature_dim; ++i) {
        const double v =
            i < static_cast<int>(doc.features.size()) ? doc.features[i] : 0.0;
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << ' ' << (i + 1) << ':' << buf;
      }
      out << '\n';
    }
  }
}

Dataset GenerateSynthetic(int num_queries, int docs_per_query, int feature_dim,
                          uint64_t seed) {
  if (num_queries < 1 || docs_per_query < 1 || feature_dim < 1) {
    throw ArgumentError("synthetic dataset sizes must all be >= 1");
  }

  // Hidden scoring direction; grades are a rounded noisy projection onto it.
  Rng weight_rng(DeriveSeed(seed, {kHiddenWeightStream}));
  std::vector<double> hidden(static_cast<size_t>(feature_dim));
  double norm = 0.0;
  for (double& w : hidden) {
    w = weight_rng.NextGaussian();
    norm += w * w;
  }
  norm = std::sqrt(norm);
  if (norm == 0.0) norm = 1.0;
  for (double& w : hidden) w /= norm;

  std::vector<Query> all;
  all.reserve(static_cast<size_t>(num_queries));
  for (int q = 0; q < num_queries; ++q) {
    Query query;
    query.query_id = q + 1;
    Rng feature_rng(DeriveSeed(seed, {kFeatureStream, static_cast<uint64_t>(q)}));
    Rng grade_rng(DeriveSeed(seed, {kGradeStream, static_cast<uint64_t>(q)}));
    for (int d = 0; d < docs_per_query; ++d) {
      Document doc;
      doc.doc_id = d;
      doc.features.resize(static_cast<size_t>(feature_dim));
      double projection = 0.0;
      for (int f = 0; f < feature_dim; ++f) {
        doc.features[static_cast<size_t>(f)] = feature_rng.NextGaussian();
        projection += hidden[static_cast<size_t>(f)] * doc.features[static_cast<size_t>(f)];
      }
      const double noisy = projection + 0.5 * grade_rng.NextGaussian();
      const long grade = std::lround(2.0 + 1.25 * noisy);
      doc.relevance_grade =
          static_cast<int>(std::clamp(grade, 0L, static_cast<long>(kMaxRelevanceGrade)));
      query.documents.push_back(std::move(doc));
    }
    all.push_back(std::move(query));
  }

  Dataset dataset;
  dataset.feature_dim = feature_dim;
  const int n_val = num_queries / 5;
  const int n_test = num_queries / 5;
  const int n_train = num_queries - n_val - n_test;
  dataset.train.assign(all.begin(), all.begin() + n_train);
  dataset.validation.assign(all.begin() + n_train, all.begin() + n_train + n_val);
  dataset.test.assign(all.begin() + n_train + n_val, all.end());
  return dataset;
}

double RelevanceProbability(int grade) {
  if (grade < 0 || grade > kMaxRelevanceGrade) {
    throw ArgumentError("relevance grade must lie in [0, 4], got " +
                        std::to_string(grade));
  }
  return 0.25 * grade;
}

void SelectProductionSubset(Dataset& dataset, double fraction, uint64_t seed) {
  if (!(fraction > 0.0) || fraction > 1.0) {
    throw ArgumentError("production label fraction must lie in (0, 1]");
  }
  if (dataset.train.empty()) {
    throw ArgumentError("dataset has no train queries");
  }
  const size_t n = dataset.train.size();
  const size_t take = std::max<size_t>(
      1, static_cast<size_t>(std::floor(fraction * static_cast<double>(n))));

  std::vector<int> qids(n);
  for (size_t i = 0; i < n; ++i) qids[i] = dataset.train[i].query_id;
  Rng rng(DeriveSeed(seed, {kSubsetStream}));
  for (size_t i = 0; i < take; ++i) {
    const size_t j = i + static_cast<size_t>(rng.NextBelow(n - i));
    std::swap(qids[i], qids[j]);
  }
  qids.resize(take);
  std::sort(qids.begin(), qids.end());
  dataset.production_label_queries = std::move(qids);
}

void StandardizeFeatures(Dataset& dataset) {
  const int dim = dataset.feature_dim;
  std::vector<double> mean(static_cast<size_t>(dim), 0.0);
  std::vector<double> var(static_cast<size_t>(dim), 0.0);
  long count = 0;
  for (const Query& query : dataset.train) {
    for (const Document& doc : query.documents) {
      ++count;
      for (int f = 0; f < dim; ++f) mean[static_cast<size_t>(f)] += doc.features[static_cast<size_t>(f)];
    }
  }
  if (count == 0) return;
  for (double& m : mean) m /= static_cast<double>(count);
  for (const Query& query : dataset.train) {
    for (const Document& doc : query.documents) {
      for (int f = 0; f < dim; ++f) {
        const double d = doc.features[static_cast<size_t>(f)] - mean[static_cast<size_t>(f)];
        var[static_cast<size_t>(f)] += d * d;
      }
    }
  }
  std::vector<double> inv_std(static_cast<size_t>(dim));
  for (int f = 0; f < dim; ++f) {
    const double s = std::sqrt(var[static_cast<size_t>(f)] / static_cast<double>(count));
    inv_std[static_cast<size_t>(f)] = s > 0.0 ? 1.0 / s : 1.0;
  }
  auto apply = [&](std::vector<Query>& split) {
    for (Query& query : split) {
      for (Document& doc : query.documents) {
        for (int f = 0; f < dim; ++f) {
          doc.features[static_cast<size_t>(f)] =
              (doc.features[static_cast<size_t>(f)] - mean[static_cast<size_t>(f)]) * inv_std[static_cast<size_t>(f)];
        }
      }
    }
  };
  apply(dataset.train);
  apply(dataset.validation);
  apply(dataset.test);
}

namespace {

std::vector<Query> LoadSplit(const std::string& path, int& feature_dim) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open " + path);
  ParsedQueries parsed;
  try {
    parsed = ParseSvmlight(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
  feature_dim = std::max(feature_dim, parsed.feature_dim);
  return std::move(parsed.queries);
}

void PadSplit(std::vector<Query>& split, int feature_dim) {
  for (Query& query : split) {
    for (Document& doc : query.documents) {
      doc.features.resize(static_cast<size_t>(feature_dim), 0.0);
    }
  }
}

}  // namespace

Dataset LoadDatasetDir(const std::string& dir) {
  namespace fs = std::filesystem;
  Dataset dataset;
  dataset.train = LoadSplit((fs::path(dir) / "train.txt").string(), dataset.feature_dim);
  dataset.validation = LoadSplit((fs::path(dir) / "vali.txt").string(), dataset.feature_dim);
  dataset.test = LoadSplit((fs::path(dir) / "test.txt").string(), dataset.feature_dim);
  PadSplit(dataset.train, dataset.feature_dim);
  PadSplit(dataset.validation, dataset.feature_dim);
  PadSplit(dataset.test, dataset.feature_dim);
  return dataset;
}

void SaveDatasetDir(const Dataset& dataset, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto write = [&](const std::vector<Query>& split, const char* name) {
    std::ofstream out(fs::path(dir) / name);
    if (!out) throw ArgumentError(std::string("cannot write ") + name + " under " + dir);
    WriteSvmlight(split, dataset.feature_dim, out);
  };
  write(dataset.train, "train.txt");
  write(dataset.validation, "vali.txt");
  write(dataset.test, "test.txt");
}

QueryIndex::QueryIndex(const std::vector<Query>& queries) {
  entries_.reserve(queries.size());
  for (const Query& query : queries) {
    Entry entry;
    entry.query = &query;
    entry.doc_index.reserve(query.documents.size());
    for (size_t i = 0; i < query.documents.size(); ++i) {
      const auto [it, inserted] =
          entry.doc_index.emplace(query.documents[i].doc_id, static_cast<int>(i));
      if (!inserted) {
        throw ArgumentError("duplicate doc_id " +
                            std::to_string(query.documents[i].doc_id) +
                            " in query " + std::to_string(query.query_id));
      }
    }
    if (!entries_.emplace(query.query_id, std::move(entry)).second) {
      throw ArgumentError("duplicate query_id " + std::to_string(query.query_id));
    }
  }
}

const Query& QueryIndex::at(int query_id) const {
  const Query* q = find(query_id);
  if (q == nullptr) {
    throw ArgumentError("unknown query_id " + std::to_string(query_id));
  }
  return *q;
}

const Query* QueryIndex::find(int query_id) const {
  const auto it = entries_.find(query_id);
  return it == entries_.end() ? nullptr : it->second.query;
}

int QueryIndex::DocIndex(int query_id, int doc_id) const {
  const auto it = entries_.find(query_id);
  if (it == entries_.end()) return -1;
  const auto doc = it->second.doc_index.find(doc_id);
  return doc == it->second.doc_index.end() ? -1 : doc->second;
}

}  // namespace ranksafe
