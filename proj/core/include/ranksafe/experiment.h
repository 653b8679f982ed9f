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

// Experiment driver: flat key=value configuration, the N-sweep runner
// (simulate clicks, estimate logging statistics, train every configured
// method, evaluate on the test split, emit CSV), and the clipped
// weight-ratio curve table.

#ifndef RANKSAFE_EXPERIMENT_H_
#define RANKSAFE_EXPERIMENT_H_

#include <iosfwd>
#include <string>
#include <vector>

#include "ranksafe/click_sim.h"
#include "ranksafe/dataset.h"
#include "ranksafe/logging_stats.h"
#include "ranksafe/metrics.h"
#include "ranksafe/prpo.h"
#include "ranksafe/trainer.h"

namespace ranksafe {

enum class SweepMethod { kIps, kDr, kSafeDr, kPrpo };

const char* ToString(SweepMethod method);
SweepMethod ParseSweepMethod(const std::string& name);

enum class TrainWeightKind { kExposure, kDcg };

struct ExperimentConfig {
  // Dataset: either a directory with train.txt/vali.txt/test.txt, or a
  // synthetic corpus.
  std::string dataset_path;  // empty means synthetic
  int num_queries = 500;
  int docs_per_query = 10;
  int feature_dim = 8;
  uint64_t dataset_seed = 7;
  bool standardize = false;

  // Production ranker, its softened logging copy, and the skyline.
  double production_fraction = 0.03;
  int production_epochs = 60;
  double production_learning_rate = 0.05;
  uint64_t production_seed = 11;
  double logging_temperature = 1.0;
  int skyline_epochs = 300;
  double skyline_learning_rate = 0.05;
  uint64_t skyline_seed = 13;

  // Click simulation.
  int k = 5;
  BiasParams bias = BiasParams::Default();
  ClickModelKind click_model = ClickModelKind::kTrust;
  int stats_samples = 1000;  // Monte-Carlo rankings per query
  double validation_fraction = 0.1;  // validation clicks = max(100, frac*N)

  // Counterfactual training.
  TrainWeightKind train_weight = TrainWeightKind::kExposure;
  double train_learning_rate = 0.02;
  double train_lr_decay = 0.0;
  int train_epochs = 120;
  int train_patience = 10;
  int train_samples_per_query = 8;
  int train_validation_samples = 256;

  // Method parameters.
  SafetyConfig safe_dr{0.95, 1.0};
  ClipSchedule prpo_schedule = ClipSchedule::OverN(100.0);

  // Sweep grid.
  std::vector<long> n_grid{100, 1000, 10000, 100000, 1000000};
  std::vector<SweepMethod> methods{SweepMethod::kIps, SweepMethod::kDr,
                                   SweepMethod::kSafeDr, SweepMethod::kPrpo};
  std::vector<uint64_t> seeds{1, 2, 3};

  // Evaluation and output.
  int eval_samples = 1000;
  uint64_t eval_seed = 1234;
  bool exponential_gain = true;
  std::string out = "sweep.csv";
  int threads = 1;

  // Parses the flat `key = value` format; errors name the offending key.
  static ExperimentConfig Parse(std::istream& in);
  static ExperimentConfig ParseFile(const std::string& path);
};

struct SweepRow {
  std::string method;
  long n = 0;
  uint64_t seed = 0;
  double ndcg_at_5 = 0.0;
  double true_utility = 0.0;
  double logging_ndcg = 0.0;
  double skyline_ndcg = 0.0;
};

inline constexpr const char* kSweepCsvHeader =
    "method,N,seed,ndcg_at_5,true_utility,logging_ndcg,skyline_ndcg";

std::string FormatSweepRow(const SweepRow& row);

// Runs the full grid. Rows are written to csv_path incrementally in a
// canonical order (logging and skyline first, then (N, seed, method) in
// config order) regardless of how many worker threads compute them, so
// equal configurations produce byte-identical files. An existing file is
// treated as a partial result: complete rows are kept verbatim and only
// the missing cells are recomputed.
std::vector<SweepRow> RunSweep(const ExperimentConfig& cfg,
                               const std::string& csv_path);

// Clipped-ratio curves: moving a document from original rank a to new rank
// b scales its DCG weight by x = log2(a+1)/log2(b+1); the table lists the
// unclipped and clipped values of +/- x for eps = (1/eps_base, eps_base).
struct Fig1Row {
  int original_rank = 0;
  int new_rank = 0;
  double ratio = 0.0;
  double clipped_pos = 0.0;  // f(x, eps-, eps+, +1)
  double clipped_neg = 0.0;  // f(x, eps-, eps+, -1)
};

std::vector<Fig1Row> Fig1Curves(double eps_base,
                                const std::vector<int>& original_ranks,
                                int max_new_rank);

// Tab-separated, gnuplot-ready; stable bytes for equal inputs.
void WriteFig1Table(const std::vector<Fig1Row>& rows, std::ostream& out);

// Re-estimates (with a growing sample budget) the statistics of any query
// whose log presents a document with zero estimated propensity, so that
// unclipped validation-side estimates stay finite. Deterministic.
void EnsureStatsSupport(LoggingStats& stats, const ClickLog& log,
                        const PolicyParams& logging,
                        const QueryIndex& queries, const BiasParams& bias,
                        int k, int base_samples, uint64_t seed);

}  // namespace ranksafe

#endif  // RANKSAFE_EXPERIMENT_H_
