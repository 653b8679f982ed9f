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

// Command-line driver: dataset generation, ranker training, click
// simulation, counterfactual training, evaluation, the N-sweep runner,
// and the clipped-ratio curve table.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ranksafe/click_sim.h"
#include "ranksafe/dataset.h"
#include "ranksafe/errors.h"
#include "ranksafe/experiment.h"
#include "ranksafe/logging_stats.h"
#include "ranksafe/metrics.h"
#include "ranksafe/policy.h"
#include "ranksafe/rng.h"
#include "ranksafe/trainer.h"

namespace {

using namespace ranksafe;

constexpr uint64_t kCliStatsStream = 0x636c6973;

std::vector<Query>& SplitByName(Dataset& dataset, const std::string& name) {
  if (name == "train") return dataset.train;
  if (name == "validation") return dataset.validation;
  if (name == "test") return dataset.test;
  throw ArgumentError("unknown split '" + name + "' (train|validation|test)");
}

int RunGenerate(const std::string& out, int queries, int docs, int dim,
                uint64_t seed) {
  const Dataset dataset = GenerateSynthetic(queries, docs, dim, seed);
  SaveDatasetDir(dataset, out);
  std::cout << "wrote " << dataset.train.size() << "/" << dataset.validation.size()
            << "/" << dataset.test.size() << " train/validation/test queries to "
            << out << "\n";
  return 0;
}

int RunTrainProduction(const std::string& data, double fraction, int epochs,
                       double lr, uint64_t seed, int k, const std::string& out) {
  Dataset dataset = LoadDatasetDir(data);
  SelectProductionSubset(dataset, fraction, seed);
  std::vector<Query> labeled;
  for (const Query& query : dataset.train) {
    if (std::binary_search(dataset.production_label_queries.begin(),
                           dataset.production_label_queries.end(), query.query_id)) {
      labeled.push_back(query);
    }
  }
  const PolicyParams params =
      TrainSupervised(labeled, epochs, {lr, 0.0}, seed, DcgWeight(k), k);
  SavePolicy(params, out);
  std::cout << "trained on " << labeled.size() << " labeled queries; policy written to "
            << out << "\n";
  return 0;
}

int RunSimulate(const std::string& data, const std::string& policy_path,
                const std::string& split, const std::string& model, int k, long n,
                double temperature, uint64_t seed, const std::string& out) {
  Dataset dataset = LoadDatasetDir(data);
  PolicyParams logging = LoadPolicy(policy_path);
  if (temperature > 0.0) logging = MakeLoggingPolicy(logging, temperature);
  const ClickLog log = Simulate(logging, SplitByName(dataset, split),
                                ParseClickModelKind(model), BiasParams::Default(), k,
                                n, seed);
  SaveClickLog(log, out);
  long clicks = 0;
  for (const auto& entry : log.entries) {
    for (const auto c : entry.clicks) clicks += c;
  }
  std::cout << "wrote " << log.N() << " interactions (" << clicks << " clicks) to "
            << out << "\n";
  return 0;
}

int RunTrain(const std::string& config_path, const std::string& data,
             const std::string& policy_path, const std::string& train_log_path,
             const std::string& validation_log_path, const std::string& method_name,
             const std::string& stats_path, const std::string& validation_stats_path,
             uint64_t seed, const std::string& out, const std::string& report_path) {
  const ExperimentConfig cfg = config_path.empty() ? ExperimentConfig()
                                                   : ExperimentConfig::ParseFile(config_path);
  Dataset dataset = LoadDatasetDir(data);
  const PolicyParams logging = LoadPolicy(policy_path);
  const ClickLog train_log = LoadClickLog(train_log_path);
  const ClickLog validation_log = LoadClickLog(validation_log_path);
  const QueryIndex train_index(dataset.train);
  const QueryIndex validation_index(dataset.validation);

  LoggingStats train_stats_raw =
      stats_path.empty()
          ? EstimateLoggingStats(logging, dataset.train, cfg.bias, cfg.k,
                                 EvalMode::Sampled(cfg.stats_samples,
                                                   DeriveSeed(seed, {kCliStatsStream, 1})))
          : LoadLoggingStats(stats_path);
  LoggingStats validation_stats =
      validation_stats_path.empty()
          ? EstimateLoggingStats(logging, dataset.validation, cfg.bias, cfg.k,
                                 EvalMode::Sampled(cfg.stats_samples,
                                                   DeriveSeed(seed, {kCliStatsStream, 2})))
          : LoadLoggingStats(validation_stats_path);
  EnsureStatsSupport(train_stats_raw, train_log, logging, train_index, cfg.bias,
                     cfg.k, cfg.stats_samples, DeriveSeed(seed, {kCliStatsStream, 3}));
  EnsureStatsSupport(validation_stats, validation_log, logging, validation_index,
                     cfg.bias, cfg.k, cfg.stats_samples,
                     DeriveSeed(seed, {kCliStatsStream, 4}));
  const LoggingStats train_stats = ClipPropensities(train_stats_raw, train_log.N());

  TrainConfig train_cfg;
  train_cfg.learning_rate = {cfg.train_learning_rate, cfg.train_lr_decay};
  train_cfg.epochs = cfg.train_epochs;
  train_cfg.early_stop_patience = cfg.train_patience;
  train_cfg.samples_per_query = cfg.train_samples_per_query;
  train_cfg.validation_samples = cfg.train_validation_samples;
  train_cfg.k = cfg.k;
  train_cfg.seed = seed;
  train_cfg.test_eval_samples = 256;
  const SweepMethod method = ParseSweepMethod(method_name);
  switch (method) {
    case SweepMethod::kIps:
      train_cfg.objective = Objective::kPlain;
      train_cfg.estimator = EstimatorKind::kIpsAffine;
      break;
    case SweepMethod::kDr:
      train_cfg.objective = Objective::kPlain;
      train_cfg.estimator = EstimatorKind::kDoublyRobust;
      break;
    case SweepMethod::kSafeDr:
      train_cfg.objective = Objective::kSafeBound;
      train_cfg.estimator = EstimatorKind::kDoublyRobust;
      train_cfg.safety = cfg.safe_dr;
      break;
    case SweepMethod::kPrpo:
      train_cfg.objective = Objective::kPrpo;
      train_cfg.estimator = EstimatorKind::kDoublyRobust;
      train_cfg.clip = cfg.prpo_schedule;
      break;
  }

  TrainInputs inputs;
  inputs.queries = &train_index;
  inputs.train_log = &train_log;
  inputs.train_stats = &train_stats;
  inputs.validation_queries = &validation_index;
  inputs.validation_log = &validation_log;
  inputs.validation_stats = &validation_stats;
  inputs.init = logging;
  inputs.assumed = cfg.bias;
  inputs.weight_fn = cfg.train_weight == TrainWeightKind::kExposure
                         ? ExposureWeight(cfg.bias, cfg.k)
                         : DcgWeight(cfg.k);
  inputs.test_queries = &dataset.test;

  const TrainReport report = TrainCounterfactual(inputs, train_cfg);
  SavePolicy(report.final_params, out);

  if (!report_path.empty()) {
    const bool fresh = !std::ifstream(report_path).good();
    std::ofstream rep(report_path, std::ios::app);
    if (!rep) throw ArgumentError("cannot write report " + report_path);
    if (fresh) rep << "method,epoch,objective,validation_estimate,test_ndcg\n";
    char buf[160];
    for (const EpochStats& epoch : report.epochs) {
      std::snprintf(buf, sizeof(buf), "%s,%d,%.6f,%.6f,%.6f\n", method_name.c_str(),
                    epoch.epoch, epoch.objective_value, epoch.validation_estimate,
                    epoch.test_ndcg);
      rep << buf;
    }
  }
  std::cout << "best epoch " << report.best_epoch << " of " << report.stopped_epoch
            << "; policy written to " << out << "\n";
  return 0;
}

int RunEvaluate(const std::string& data, const std::string& policy_path,
                const std::string& split, int k, int samples, uint64_t seed) {
  Dataset dataset = LoadDatasetDir(data);
  const PolicyParams policy = LoadPolicy(policy_path);
  const std::vector<Query>& queries = SplitByName(dataset, split);
  const double ndcg = NdcgAtK(policy, queries, k, EvalMode::Sampled(samples, seed));
  const double utility =
      TrueUtility(policy, queries, DcgWeight(k), k, EvalMode::Sampled(samples, seed));
  std::printf("ndcg@%d %.6f\ntrue_utility %.6f\n", k, ndcg, utility);
  return 0;
}

int RunSweepCommand(const std::string& config_path, const std::string& out_override,
                    int threads_override) {
  ExperimentConfig cfg = ExperimentConfig::ParseFile(config_path);
  if (!out_override.empty()) cfg.out = out_override;
  if (threads_override > 0) cfg.threads = threads_override;
  const std::vector<SweepRow> rows = RunSweep(cfg, cfg.out);
  std::cout << "wrote " << rows.size() << " rows to " << cfg.out << "\n";
  return 0;
}

int RunFig1(double eps, const std::string& ranks_str, int max_new_rank,
            const std::string& out) {
  std::vector<int> ranks;
  std::istringstream in(ranks_str);
  std::string item;
  while (std::getline(in, item, ',')) ranks.push_back(std::stoi(item));
  const std::vector<Fig1Row> rows = Fig1Curves(eps, ranks, max_new_rank);
  std::ofstream file(out);
  if (!file) throw ArgumentError("cannot write " + out);
  WriteFig1Table(rows, file);
  std::cout << "wrote " << rows.size() << " rows to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Counterfactual learning-to-rank with risk-bounded and "
               "ratio-clipped safe training"};
  app.require_subcommand(1);

  // generate
  auto* generate = app.add_subcommand("generate", "Generate a synthetic dataset");
  std::string gen_out = "data";
  int gen_queries = 500, gen_docs = 10, gen_dim = 8;
  uint64_t gen_seed = 7;
  generate->add_option("--out", gen_out, "Output directory");
  generate->add_option("--queries", gen_queries, "Number of queries");
  generate->add_option("--docs", gen_docs, "Documents per query");
  generate->add_option("--dim", gen_dim, "Feature dimensionality");
  generate->add_option("--seed", gen_seed, "Generator seed");

  // train-production
  auto* production = app.add_subcommand(
      "train-production", "Train a supervised ranker on a labeled query fraction");
  std::string prod_data = "data", prod_out = "production.policy";
  double prod_fraction = 0.03, prod_lr = 0.05;
  int prod_epochs = 60, prod_k = 5;
  uint64_t prod_seed = 11;
  production->add_option("--data", prod_data, "Dataset directory");
  production->add_option("--fraction", prod_fraction, "Labeled fraction of train queries");
  production->add_option("--epochs", prod_epochs, "Training epochs");
  production->add_option("--lr", prod_lr, "Learning rate");
  production->add_option("--seed", prod_seed, "Training seed");
  production->add_option("--k", prod_k, "Ranking cutoff");
  production->add_option("--out", prod_out, "Output policy file");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Generate a click log");
  std::string sim_data = "data", sim_policy = "production.policy";
  std::string sim_split = "train", sim_model = "trust", sim_out = "clicks.log";
  int sim_k = 5;
  long sim_n = 1000;
  double sim_temperature = 0.0;
  uint64_t sim_seed = 1;
  simulate->add_option("--data", sim_data, "Dataset directory");
  simulate->add_option("--policy", sim_policy, "Logging policy file");
  simulate->add_option("--split", sim_split, "Query split to simulate on");
  simulate->add_option("--model", sim_model, "Click model (position|trust|adversarial)");
  simulate->add_option("--k", sim_k, "Displayed ranking length");
  simulate->add_option("--n", sim_n, "Number of interactions");
  simulate->add_option("--temperature", sim_temperature,
                       "Override the policy temperature (0 keeps the file's value)");
  simulate->add_option("--seed", sim_seed, "Simulation seed");
  simulate->add_option("--out", sim_out, "Output click log");

  // train
  auto* train = app.add_subcommand("train", "Counterfactual training on click logs");
  std::string train_config, train_data = "data", train_policy = "production.policy";
  std::string train_log_path = "clicks.log", train_val_log = "validation.log";
  std::string train_method = "prpo", train_stats_path, train_val_stats_path;
  std::string train_out = "trained.policy", train_report;
  uint64_t train_seed = 1;
  train->add_option("--config", train_config, "Experiment config file");
  train->add_option("--data", train_data, "Dataset directory");
  train->add_option("--policy", train_policy, "Logging policy file");
  train->add_option("--train-log", train_log_path, "Training click log");
  train->add_option("--validation-log", train_val_log, "Validation click log");
  train->add_option("--method", train_method, "ips|dr|safe_dr|prpo");
  train->add_option("--stats", train_stats_path, "Precomputed training statistics");
  train->add_option("--validation-stats", train_val_stats_path,
                    "Precomputed validation statistics");
  train->add_option("--seed", train_seed, "Training seed");
  train->add_option("--out", train_out, "Output policy file");
  train->add_option("--report", train_report, "Per-epoch report CSV (appended)");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a policy on a split");
  std::string eval_data = "data", eval_policy = "trained.policy", eval_split = "test";
  int eval_k = 5, eval_samples = 1000;
  uint64_t eval_seed = 1234;
  evaluate->add_option("--data", eval_data, "Dataset directory");
  evaluate->add_option("--policy", eval_policy, "Policy file");
  evaluate->add_option("--split", eval_split, "Query split");
  evaluate->add_option("--k", eval_k, "Metric cutoff");
  evaluate->add_option("--samples", eval_samples, "Ranking samples per query");
  evaluate->add_option("--seed", eval_seed, "Evaluation seed");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Run the full N-grid experiment");
  std::string sweep_config = "experiment.cfg", sweep_out;
  int sweep_threads = 0;
  sweep->add_option("--config", sweep_config, "Experiment config file")->required();
  sweep->add_option("--out", sweep_out, "Override the output CSV path");
  sweep->add_option("--threads", sweep_threads, "Override the worker thread count");

  // fig1
  auto* fig1 = app.add_subcommand("fig1", "Clipped weight-ratio curve table");
  double fig1_eps = 1.15;
  std::string fig1_ranks = "1,2,5,10", fig1_out = "fig1.tsv";
  int fig1_max_rank = 20;
  fig1->add_option("--eps", fig1_eps, "Clip base (eps- = 1/eps, eps+ = eps)");
  fig1->add_option("--ranks", fig1_ranks, "Original ranks, comma separated");
  fig1->add_option("--max-new-rank", fig1_max_rank, "Largest new rank");
  fig1->add_option("--out", fig1_out, "Output table path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) {
      return RunGenerate(gen_out, gen_queries, gen_docs, gen_dim, gen_seed);
    }
    if (production->parsed()) {
      return RunTrainProduction(prod_data, prod_fraction, prod_epochs, prod_lr,
                                prod_seed, prod_k, prod_out);
    }
    if (simulate->parsed()) {
      return RunSimulate(sim_data, sim_policy, sim_split, sim_model, sim_k, sim_n,
                         sim_temperature, sim_seed, sim_out);
    }
    if (train->parsed()) {
      return RunTrain(train_config, train_data, train_policy, train_log_path,
                      train_val_log, train_method, train_stats_path,
                      train_val_stats_path, train_seed, train_out, train_report);
    }
    if (evaluate->parsed()) {
      return RunEvaluate(eval_data, eval_policy, eval_split, eval_k, eval_samples,
                         eval_seed);
    }
    if (sweep->parsed()) {
      return RunSweepCommand(sweep_config, sweep_out, sweep_threads);
    }
    if (fig1->parsed()) {
      return RunFig1(fig1_eps, fig1_ranks, fig1_max_rank, fig1_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
