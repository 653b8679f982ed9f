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

#include <set>
#include <sstream>

#include "doctest.h"
#include "ranksafe/errors.h"
#include "ranksafe/rng.h"

using namespace ranksafe;

namespace {

ParsedQueries ParseText(const std::string& text) {
  std::istringstream in(text);
  return ParseSvmlight(in);
}

}  // namespace

TEST_CASE("svmlight parsing fills absent features with zero") {
  const ParsedQueries parsed = ParseText("2 qid:1 1:0.5 3:1.0\n");
  REQUIRE(parsed.queries.size() == 1);
  REQUIRE(parsed.queries[0].documents.size() == 1);
  CHECK(parsed.feature_dim == 3);
  const Document& doc = parsed.queries[0].documents[0];
  CHECK(doc.relevance_grade == 2);
  CHECK(doc.features == std::vector<double>{0.5, 0.0, 1.0});
}

TEST_CASE("svmlight parsing groups rows by query id") {
  const ParsedQueries parsed = ParseText("0 qid:7 1:0.1\n1 qid:7 1:0.2\n");
  REQUIRE(parsed.queries.size() == 1);
  CHECK(parsed.queries[0].query_id == 7);
  CHECK(parsed.queries[0].documents.size() == 2);
  CHECK(parsed.queries[0].documents[0].doc_id == 0);
  CHECK(parsed.queries[0].documents[1].doc_id == 1);
}

TEST_CASE("svmlight parsing keeps first-appearance query order") {
  const ParsedQueries parsed =
      ParseText("0 qid:9 1:0.1\n0 qid:2 1:0.1\n1 qid:9 1:0.3\n");
  REQUIRE(parsed.queries.size() == 2);
  CHECK(parsed.queries[0].query_id == 9);
  CHECK(parsed.queries[1].query_id == 2);
  CHECK(parsed.queries[0].documents.size() == 2);
}

TEST_CASE("svmlight parsing ignores comments and blank lines") {
  const ParsedQueries parsed =
      ParseText("\n# full comment line\n2 qid:1 1:0.5 # trailing words\n");
  REQUIRE(parsed.queries.size() == 1);
  CHECK(parsed.queries[0].documents[0].features == std::vector<double>{0.5});
}

TEST_CASE("svmlight parse errors carry line numbers") {
  CHECK_THROWS_WITH_AS(ParseText("x qid:1 1:0.5\n"),
                       doctest::Contains("line 1"), ParseError);
  CHECK_THROWS_WITH_AS(ParseText("1 qid:1 1:0.5\n2 1:0.3\n"),
                       doctest::Contains("line 2"), ParseError);
  // Non-increasing indices.
  CHECK_THROWS_AS(ParseText("1 qid:1 2:0.5 2:0.3\n"), ParseError);
  CHECK_THROWS_AS(ParseText("1 qid:1 3:0.5 1:0.3\n"), ParseError);
  // Grade outside the supported range.
  CHECK_THROWS_AS(ParseText("7 qid:1 1:0.5\n"), ParseError);
}

TEST_CASE("svmlight write/parse round trip is value identical") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const Dataset dataset = GenerateSynthetic(
        4 + static_cast<int>(rng.NextBelow(4)), 3, 4, rng.NextU64());
    std::ostringstream out;
    WriteSvmlight(dataset.train, dataset.feature_dim, out);
    const ParsedQueries reparsed = ParseText(out.str());
    REQUIRE(reparsed.queries.size() == dataset.train.size());
    CHECK(reparsed.feature_dim == dataset.feature_dim);
    for (size_t q = 0; q < reparsed.queries.size(); ++q) {
      const Query& a = dataset.train[q];
      const Query& b = reparsed.queries[q];
      REQUIRE(a.documents.size() == b.documents.size());
      CHECK(a.query_id == b.query_id);
      for (size_t d = 0; d < a.documents.size(); ++d) {
        CHECK(a.documents[d].relevance_grade == b.documents[d].relevance_grade);
        CHECK(a.documents[d].features == b.documents[d].features);
      }
    }
  }
}

TEST_CASE("synthetic generation is deterministic and seed sensitive") {
  const Dataset a = GenerateSynthetic(100, 10, 8, 1);
  const Dataset b = GenerateSynthetic(100, 10, 8, 1);
  const Dataset c = GenerateSynthetic(100, 10, 8, 2);

  REQUIRE(a.train.size() == b.train.size());
  bool identical = true;
  bool grades_differ_from_c = false;
  for (size_t q = 0; q < a.train.size(); ++q) {
    for (size_t d = 0; d < a.train[q].documents.size(); ++d) {
      identical = identical &&
                  a.train[q].documents[d].features == b.train[q].documents[d].features &&
                  a.train[q].documents[d].relevance_grade ==
                      b.train[q].documents[d].relevance_grade;
      grades_differ_from_c =
          grades_differ_from_c || a.train[q].documents[d].relevance_grade !=
                                      c.train[q].documents[d].relevance_grade;
    }
  }
  CHECK(identical);
  CHECK(grades_differ_from_c);
}

TEST_CASE("synthetic split is 60/20/20 with the remainder in train") {
  const Dataset tiny = GenerateSynthetic(5, 5, 4, 3);
  CHECK(tiny.train.size() == 3);
  CHECK(tiny.validation.size() == 1);
  CHECK(tiny.test.size() == 1);

  const Dataset big = GenerateSynthetic(103, 5, 4, 3);
  CHECK(big.train.size() == 63);
  CHECK(big.validation.size() == 20);
  CHECK(big.test.size() == 20);
}

TEST_CASE("synthetic splits partition the query ids") {
  const Dataset dataset = GenerateSynthetic(50, 5, 4, 11);
  std::set<int> seen;
  size_t total = 0;
  for (const auto* split : {&dataset.train, &dataset.validation, &dataset.test}) {
    for (const Query& query : *split) {
      seen.insert(query.query_id);
      ++total;
    }
  }
  CHECK(seen.size() == total);
  CHECK(total == 50);
}

TEST_CASE("synthetic generation rejects zero sizes") {
  CHECK_THROWS_AS(GenerateSynthetic(0, 5, 4, 1), ArgumentError);
  CHECK_THROWS_AS(GenerateSynthetic(5, 0, 4, 1), ArgumentError);
  CHECK_THROWS_AS(GenerateSynthetic(5, 5, 0, 1), ArgumentError);
}

TEST_CASE("relevance probability is a quarter of the grade") {
  CHECK(RelevanceProbability(0) == 0.0);
  CHECK(RelevanceProbability(2) == 0.5);
  CHECK(RelevanceProbability(4) == 1.0);
  CHECK_THROWS_AS(RelevanceProbability(-1), ArgumentError);
  CHECK_THROWS_AS(RelevanceProbability(5), ArgumentError);
}

TEST_CASE("production subset selection") {
  Dataset dataset = GenerateSynthetic(170, 5, 4, 21);  // 102 train queries

  SUBCASE("full fraction selects every train query") {
    SelectProductionSubset(dataset, 1.0, 5);
    CHECK(dataset.production_label_queries.size() == dataset.train.size());
  }
  SUBCASE("three percent of one hundred is three") {
    Dataset hundred = GenerateSynthetic(167, 5, 4, 21);  // 101 train queries
    hundred.train.resize(100);
    SelectProductionSubset(hundred, 0.03, 5);
    CHECK(hundred.production_label_queries.size() == 3);
  }
  SUBCASE("the floor is lifted to one query") {
    Dataset small = dataset;
    small.train.resize(10);
    SelectProductionSubset(small, 0.03, 5);
    CHECK(small.production_label_queries.size() == 1);
  }
  SUBCASE("selection is deterministic and a subset of train") {
    SelectProductionSubset(dataset, 0.1, 5);
    const std::vector<int> first = dataset.production_label_queries;
    SelectProductionSubset(dataset, 0.1, 5);
    CHECK(first == dataset.production_label_queries);
    std::set<int> train_ids;
    for (const Query& query : dataset.train) train_ids.insert(query.query_id);
    for (const int qid : first) CHECK(train_ids.count(qid) == 1);
  }
  SUBCASE("fraction outside (0, 1] is rejected") {
    CHECK_THROWS_AS(SelectProductionSubset(dataset, 0.0, 5), ArgumentError);
    CHECK_THROWS_AS(SelectProductionSubset(dataset, 1.5, 5), ArgumentError);
  }
}

TEST_CASE("query index lookups") {
  const Dataset dataset = GenerateSynthetic(10, 4, 3, 2);
  const QueryIndex index(dataset.train);
  const Query& first = dataset.train.front();
  CHECK(&index.at(first.query_id) == &first);
  CHECK(index.DocIndex(first.query_id, first.documents[2].doc_id) == 2);
  CHECK(index.find(123456) == nullptr);
  CHECK(index.DocIndex(first.query_id, 99999) == -1);
  CHECK_THROWS_AS(index.at(123456), ArgumentError);
}

TEST_CASE("feature standardization centers the train split") {
  Dataset dataset = GenerateSynthetic(40, 6, 5, 31);
  StandardizeFeatures(dataset);
  const int dim = dataset.feature_dim;
  std::vector<double> mean(static_cast<size_t>(dim), 0.0);
  long count = 0;
  for (const Query& query : dataset.train) {
    for (const Document& doc : query.documents) {
      ++count;
      for (int f = 0; f < dim; ++f) mean[static_cast<size_t>(f)] += doc.features[static_cast<size_t>(f)];
    }
  }
  for (const double m : mean) {
    CHECK(std::abs(m / static_cast<double>(count)) < 1e-9);
  }
}
