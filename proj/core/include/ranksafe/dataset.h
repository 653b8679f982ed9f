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

// Ranking corpora: SVMLight/LETOR ingestion, synthetic data generation,
// train/validation/test splits, and the production-label query subset.

#ifndef RANKSAFE_DATASET_H_
#define RANKSAFE_DATASET_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

namespace ranksafe {

inline constexpr int kMaxRelevanceGrade = 4;

struct Document {
  int doc_id = 0;  // unique within its query
  std::vector<double> features;
  int relevance_grade = 0;  // in [0, kMaxRelevanceGrade]
};

struct Query {
  int query_id = 0;
  std::vector<Document> documents;
};

struct Dataset {
  std::vector<Query> train;
  std::vector<Query> validation;
  std::vector<Query> test;
  int feature_dim = 0;
  // Sorted query ids, subset of the train split; the queries whose manual
  // labels the production ranker is allowed to see.
  std::vector<int> production_label_queries;
};

struct ParsedQueries {
  std::vector<Query> queries;
  int feature_dim = 0;
};

// Parses SVMLight/LETOR lines: `<grade> qid:<id> <idx>:<val> ... [# comment]`.
// Feature indices are 1-based and strictly increasing per line; absent
// indices read as 0. Queries are grouped by qid in order of first appearance.
// Throws ParseError (with line number) on malformed input.
ParsedQueries ParseSvmlight(std::istream& in);

// Writes queries densely (every index up to feature_dim) so that a
// parse -> write -> parse round trip is value-identical.
void WriteSvmlight(const std::vector<Query>& queries, int feature_dim,
                   std::ostream& out);

// Deterministic synthetic corpus with a learnable linear relevance signal:
// grades are a bucketed noisy linear function of the features, so a linear
// ranker trained on them beats a random ordering. Queries are split
// 60/20/20, remainder to train.
Dataset GenerateSynthetic(int num_queries, int docs_per_query, int feature_dim,
                          uint64_t seed);

// P(R = 1 | grade) = 0.25 * grade. Throws ArgumentError outside [0, 4].
double RelevanceProbability(int grade);

// Marks a uniform random subset of train query ids, of size
// max(1, floor(fraction * |train|)), as production-labeled.
void SelectProductionSubset(Dataset& dataset, double fraction, uint64_t seed);

// In-place z-scoring of every feature using train-split statistics.
// Off by default everywhere; exposed as a config option.
void StandardizeFeatures(Dataset& dataset);

// Reads/writes the three-file split layout (train.txt, vali.txt, test.txt)
// under a directory.
Dataset LoadDatasetDir(const std::string& dir);
void SaveDatasetDir(const Dataset& dataset, const std::string& dir);

// Query/document lookup over one or more splits. Holds pointers into the
// underlying vectors, which must outlive the index.
class QueryIndex {
 public:
  explicit QueryIndex(const std::vector<Query>& queries);

  const Query& at(int query_id) const;
  const Query* find(int query_id) const;
  // Position of doc_id inside the query's document list; -1 if absent.
  int DocIndex(int query_id, int doc_id) const;

 private:
  struct Entry {
    const Query* query;
    std::unordered_map<int, int> doc_index;
  };
  std::unordered_map<int, Entry> entries_;
};

}  // namespace ranksafe

#endif  // RANKSAFE_DATASET_H_
