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

#include "ranksafe/experiment.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "ranksafe/errors.h"
#include "ranksafe/rng.h"

namespace ranksafe {
namespace {

constexpr uint64_t kSimTrainStream = 0x73696d74;
constexpr uint64_t kSimValStream = 0x73696d76;
constexpr uint64_t kStatsTrainStream = 0x73747472;
constexpr uint64_t kStatsValStream = 0x73747661;
constexpr uint64_t kSupportStream = 0x73757070;
constexpr uint64_t kTrainStream = 0x7472636e;
constexpr uint64_t kEvalNdcgStream = 0x656e6463;
constexpr uint64_t kEvalUtilStream = 0x65757469;

// ---------------------------------------------------------------------------
// Flat key=value configuration.

class KeyValues {
 public:
  static KeyValues Read(std::istream& in) {
    KeyValues kv;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (const size_t hash = line.find('#'); hash != std::string::npos) {
        line.resize(hash);
      }
      const auto trim = [](std::string s) {
        const auto is_space = [](unsigned char c) { return std::isspace(c); };
        while (!s.empty() && is_space(s.front())) s.erase(s.begin());
        while (!s.empty() && is_space(s.back())) s.pop_back();
        return s;
      };
      if (trim(line).empty()) continue;
      const size_t eq = line.find('=');
      if (eq == std::string::npos) {
        throw ParseError("expected key = value", line_no);
      }
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) throw ParseError("empty config key", line_no);
      if (!kv.values_.emplace(key, value).second) {
        throw ParseError("duplicate config key '" + key + "'", line_no);
      }
    }
    return kv;
  }

  bool Has(const std::string& key) {
    consumed_.insert(key);
    return values_.count(key) > 0;
  }

  std::string Take(const std::string& key, const std::string& fallback) {
    consumed_.insert(key);
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  long TakeLong(const std::string& key, long fallback) {
    return Convert<long>(key, fallback, [](const std::string& s) { return std::stol(s); });
  }

  double TakeDouble(const std::string& key, double fallback) {
    return Convert<double>(key, fallback, [](const std::string& s) { return std::stod(s); });
  }

  bool TakeBool(const std::string& key, bool fallback) {
    const std::string v = Take(key, fallback ? "true" : "false");
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ArgumentError("config key '" + key + "': expected a boolean, got '" + v + "'");
  }

  std::vector<std::string> TakeList(const std::string& key, const std::string& fallback) {
    std::vector<std::string> items;
    std::istringstream in(Take(key, fallback));
    std::string item;
    while (std::getline(in, item, ',')) {
      while (!item.empty() && std::isspace(static_cast<unsigned char>(item.front()))) {
        item.erase(item.begin());
      }
      while (!item.empty() && std::isspace(static_cast<unsigned char>(item.back()))) {
        item.pop_back();
      }
      if (!item.empty()) items.push_back(item);
    }
    if (items.empty()) {
      throw ArgumentError("config key '" + key + "': expected a nonempty list");
    }
    return items;
  }

  void FinishOrThrow() const {
    for (const auto& [key, value] : values_) {
      if (consumed_.count(key) == 0) {
        throw ArgumentError("config: unknown key '" + key + "'");
      }
    }
  }

 private:
  template <typename T, typename F>
  T Convert(const std::string& key, T fallback, const F& parse) {
    consumed_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      return parse(it->second);
    } catch (const std::exception&) {
      throw ArgumentError("config key '" + key + "': cannot parse '" + it->second + "'");
    }
  }

  std::map<std::string, std::string> values_;
  std::set<std::string> consumed_;
};

std::vector<double> ParseDoubleList(KeyValues& kv, const std::string& key,
                                    const std::string& fallback) {
  std::vector<double> out;
  for (const std::string& item : kv.TakeList(key, fallback)) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ArgumentError("config key '" + key + "': cannot parse '" + item + "'");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sweep internals.

std::vector<Query> LabeledSubset(const Dataset& dataset) {
  std::vector<Query> subset;
  for (const Query& query : dataset.train) {
    if (std::binary_search(dataset.production_label_queries.begin(),
                           dataset.production_label_queries.end(), query.query_id)) {
      subset.push_back(query);
    }
  }
  return subset;
}

TrainConfig MakeTrainConfig(const ExperimentConfig& cfg, SweepMethod method,
                            long n, uint64_t run_seed) {
  // Seeds are tagged by the method identity (not its position in the
  // config list) so resumed or reordered sweeps recompute identical cells.
  const auto method_tag = static_cast<uint64_t>(method);
  TrainConfig train;
  train.learning_rate = {cfg.train_learning_rate, cfg.train_lr_decay};
  train.epochs = cfg.train_epochs;
  train.early_stop_patience = cfg.train_patience;
  train.samples_per_query = cfg.train_samples_per_query;
  train.validation_samples = cfg.train_validation_samples;
  train.test_eval_samples = 0;
  train.k = cfg.k;
  train.seed = DeriveSeed(run_seed, {kTrainStream, static_cast<uint64_t>(n), method_tag});
  switch (method) {
    case SweepMethod::kIps:
      train.objective = Objective::kPlain;
      train.estimator = EstimatorKind::kIpsAffine;
      break;
    case SweepMethod::kDr:
      train.objective = Objective::kPlain;
      train.estimator = EstimatorKind::kDoublyRobust;
      break;
    case SweepMethod::kSafeDr:
      train.objective = Objective::kSafeBound;
      train.estimator = EstimatorKind::kDoublyRobust;
      train.safety = cfg.safe_dr;
      break;
    case SweepMethod::kPrpo:
      train.objective = Objective::kPrpo;
      train.estimator = EstimatorKind::kDoublyRobust;
      train.clip = cfg.prpo_schedule;
      break;
  }
  return train;
}

struct SweepShared {
  const ExperimentConfig* cfg = nullptr;
  const Dataset* dataset = nullptr;
  const QueryIndex* train_index = nullptr;
  const QueryIndex* validation_index = nullptr;
  PolicyParams logging;
  RankWeightFn train_weight_fn;
  double logging_ndcg = 0.0;
  double skyline_ndcg = 0.0;
  // Per run seed, precomputed raw (unclipped) statistics.
  std::map<uint64_t, LoggingStats> train_stats;
  std::map<uint64_t, LoggingStats> validation_stats;
};

SweepRow EvaluateRow(const SweepShared& shared, const std::string& method, long n,
                     uint64_t seed, const PolicyParams& policy,
                     uint64_t eval_tag) {
  const ExperimentConfig& cfg = *shared.cfg;
  SweepRow row;
  row.method = method;
  row.n = n;
  row.seed = seed;
  row.logging_ndcg = shared.logging_ndcg;
  row.skyline_ndcg = shared.skyline_ndcg;
  row.ndcg_at_5 = NdcgAtK(
      policy, shared.dataset->test, cfg.k,
      EvalMode::Sampled(cfg.eval_samples,
                        DeriveSeed(cfg.eval_seed, {kEvalNdcgStream, eval_tag})),
      cfg.exponential_gain);
  row.true_utility = TrueUtility(
      policy, shared.dataset->test, DcgWeight(cfg.k), cfg.k,
      EvalMode::Sampled(cfg.eval_samples,
                        DeriveSeed(cfg.eval_seed, {kEvalUtilStream, eval_tag})));
  return row;
}

// Everything inside one (N, seed) cell group: simulate both logs once,
// repair the validation statistics against this log, then train every
// requested method on the shared data.
std::vector<SweepRow> ComputeGroup(const SweepShared& shared, long n, uint64_t seed,
                                   const std::vector<SweepMethod>& methods) {
  const ExperimentConfig& cfg = *shared.cfg;
  const Dataset& dataset = *shared.dataset;

  const ClickLog train_log =
      Simulate(shared.logging, dataset.train, cfg.click_model, cfg.bias, cfg.k, n,
               DeriveSeed(seed, {kSimTrainStream, static_cast<uint64_t>(n)}));
  const long validation_n = std::max<long>(
      100, std::lround(cfg.validation_fraction * static_cast<double>(n)));
  const ClickLog validation_log =
      Simulate(shared.logging, dataset.validation, cfg.click_model, cfg.bias, cfg.k,
               validation_n, DeriveSeed(seed, {kSimValStream, static_cast<uint64_t>(n)}));

  LoggingStats train_stats_raw = shared.train_stats.at(seed);
  EnsureStatsSupport(train_stats_raw, train_log, shared.logging, *shared.train_index,
                     cfg.bias, cfg.k, cfg.stats_samples,
                     DeriveSeed(seed, {kSupportStream, 1, static_cast<uint64_t>(n)}));
  const LoggingStats train_stats = ClipPropensities(train_stats_raw, n);

  LoggingStats validation_stats = shared.validation_stats.at(seed);
  EnsureStatsSupport(validation_stats, validation_log, shared.logging,
                     *shared.validation_index, cfg.bias, cfg.k, cfg.stats_samples,
                     DeriveSeed(seed, {kSupportStream, 2, static_cast<uint64_t>(n)}));

  std::vector<SweepRow> rows;
  rows.reserve(methods.size());
  for (const SweepMethod method : methods) {
    TrainInputs inputs;
    inputs.queries = shared.train_index;
    inputs.train_log = &train_log;
    inputs.train_stats = &train_stats;
    inputs.validation_queries = shared.validation_index;
    inputs.validation_log = &validation_log;
    inputs.validation_stats = &validation_stats;
    inputs.init = shared.logging;
    inputs.assumed = cfg.bias;
    inputs.weight_fn = shared.train_weight_fn;

    const TrainConfig train_cfg = MakeTrainConfig(cfg, method, n, seed);
    const TrainReport report = TrainCounterfactual(inputs, train_cfg);
    rows.push_back(EvaluateRow(shared, ToString(method), n, seed,
                               report.final_params,
                               DeriveSeed(seed, {static_cast<uint64_t>(n),
                                                 static_cast<uint64_t>(method)})));
  }
  return rows;
}

std::string RowKey(const std::string& method, long n, uint64_t seed) {
  return method + "," + std::to_string(n) + "," + std::to_string(seed);
}

SweepRow ParseSweepRowLine(const std::string& line) {
  std::istringstream in(line);
  std::string field;
  SweepRow row;
  try {
    std::getline(in, row.method, ',');
    std::getline(in, field, ',');
    row.n = std::stol(field);
    std::getline(in, field, ',');
    row.seed = std::stoull(field);
    std::getline(in, field, ',');
    row.ndcg_at_5 = std::stod(field);
    std::getline(in, field, ',');
    row.true_utility = std::stod(field);
    std::getline(in, field, ',');
    row.logging_ndcg = std::stod(field);
    std::getline(in, field);
    row.skyline_ndcg = std::stod(field);
  } catch (const std::exception&) {
    throw ParseError("bad sweep row: " + line);
  }
  return row;
}

// Raw complete rows of a previous (possibly interrupted) run, keyed by
// method,N,seed. Kept verbatim so a resumed file is byte-identical to an
// uninterrupted one.
std::map<std::string, std::string> ReadExistingRows(const std::string& path) {
  std::map<std::string, std::string> rows;
  std::ifstream in(path);
  if (!in) return rows;
  std::string line;
  if (!std::getline(in, line)) return rows;
  if (line != kSweepCsvHeader) {
    throw ArgumentError("existing output file " + path +
                        " does not look like a sweep CSV; refusing to resume");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    size_t commas = 0;
    for (const char c : line) commas += c == ',';
    if (commas != 6) continue;  // interrupted mid-row
    try {
      const SweepRow row = ParseSweepRowLine(line);
      rows[RowKey(row.method, row.n, row.seed)] = line;
    } catch (const ParseError&) {
      continue;
    }
  }
  return rows;
}

}  // namespace

const char* ToString(SweepMethod method) {
  switch (method) {
    case SweepMethod::kIps:
      return "ips";
    case SweepMethod::kDr:
      return "dr";
    case SweepMethod::kSafeDr:
      return "safe_dr";
    case SweepMethod::kPrpo:
      return "prpo";
  }
  return "unknown";
}

SweepMethod ParseSweepMethod(const std::string& name) {
  if (name == "ips") return SweepMethod::kIps;
  if (name == "dr") return SweepMethod::kDr;
  if (name == "safe_dr") return SweepMethod::kSafeDr;
  if (name == "prpo") return SweepMethod::kPrpo;
  throw ArgumentError("config key 'sweep.methods': unknown method '" + name +
                      "' (expected ips|dr|safe_dr|prpo)");
}

ExperimentConfig ExperimentConfig::Parse(std::istream& in) {
  KeyValues kv = KeyValues::Read(in);
  ExperimentConfig cfg;

  cfg.dataset_path = kv.Take("dataset.path", "");
  const bool synthetic = kv.TakeBool("dataset.synthetic", cfg.dataset_path.empty());
  if (synthetic && !cfg.dataset_path.empty()) {
    throw ArgumentError("config: dataset.path and dataset.synthetic=true conflict");
  }
  if (!synthetic && cfg.dataset_path.empty()) {
    throw ArgumentError("config key 'dataset.path': required unless synthetic");
  }
  cfg.num_queries = static_cast<int>(kv.TakeLong("dataset.num_queries", cfg.num_queries));
  cfg.docs_per_query =
      static_cast<int>(kv.TakeLong("dataset.docs_per_query", cfg.docs_per_query));
  cfg.feature_dim = static_cast<int>(kv.TakeLong("dataset.feature_dim", cfg.feature_dim));
  cfg.dataset_seed =
      static_cast<uint64_t>(kv.TakeLong("dataset.seed", static_cast<long>(cfg.dataset_seed)));
  cfg.standardize = kv.TakeBool("dataset.standardize", cfg.standardize);

  cfg.production_fraction = kv.TakeDouble("production.fraction", cfg.production_fraction);
  cfg.production_epochs =
      static_cast<int>(kv.TakeLong("production.epochs", cfg.production_epochs));
  cfg.production_learning_rate =
      kv.TakeDouble("production.learning_rate", cfg.production_learning_rate);
  cfg.production_seed = static_cast<uint64_t>(
      kv.TakeLong("production.seed", static_cast<long>(cfg.production_seed)));
  cfg.logging_temperature = kv.TakeDouble("logging.temperature", cfg.logging_temperature);
  cfg.skyline_epochs = static_cast<int>(kv.TakeLong("skyline.epochs", cfg.skyline_epochs));
  cfg.skyline_learning_rate =
      kv.TakeDouble("skyline.learning_rate", cfg.skyline_learning_rate);
  cfg.skyline_seed = static_cast<uint64_t>(
      kv.TakeLong("skyline.seed", static_cast<long>(cfg.skyline_seed)));

  cfg.k = static_cast<int>(kv.TakeLong("k", cfg.k));
  if (kv.Has("bias.alpha") || kv.Has("bias.beta")) {
    cfg.bias.alpha = ParseDoubleList(kv, "bias.alpha", "0.35,0.53,0.55,0.54,0.52");
    cfg.bias.beta = ParseDoubleList(kv, "bias.beta", "0.65,0.26,0.15,0.11,0.08");
  }
  try {
    ValidateBias(cfg.bias);
  } catch (const ArgumentError& e) {
    throw ArgumentError(std::string("config key 'bias.alpha/bias.beta': ") + e.what());
  }
  cfg.click_model = ParseClickModelKind(kv.Take("click.model", "trust"));
  cfg.stats_samples = static_cast<int>(kv.TakeLong("stats.samples", cfg.stats_samples));
  cfg.validation_fraction =
      kv.TakeDouble("sweep.validation_fraction", cfg.validation_fraction);

  const std::string weight = kv.Take("train.weight", "exposure");
  if (weight == "exposure") {
    cfg.train_weight = TrainWeightKind::kExposure;
  } else if (weight == "dcg") {
    cfg.train_weight = TrainWeightKind::kDcg;
  } else {
    throw ArgumentError("config key 'train.weight': expected exposure|dcg");
  }
  cfg.train_learning_rate = kv.TakeDouble("train.learning_rate", cfg.train_learning_rate);
  cfg.train_lr_decay = kv.TakeDouble("train.lr_decay", cfg.train_lr_decay);
  cfg.train_epochs = static_cast<int>(kv.TakeLong("train.epochs", cfg.train_epochs));
  cfg.train_patience = static_cast<int>(kv.TakeLong("train.patience", cfg.train_patience));
  cfg.train_samples_per_query = static_cast<int>(
      kv.TakeLong("train.samples_per_query", cfg.train_samples_per_query));
  cfg.train_validation_samples = static_cast<int>(
      kv.TakeLong("train.validation_samples", cfg.train_validation_samples));

  cfg.safe_dr.delta = kv.TakeDouble("safe_dr.delta", cfg.safe_dr.delta);
  cfg.safe_dr.z = kv.TakeDouble("safe_dr.z", cfg.safe_dr.z);
  try {
    ValidateSafetyConfig(cfg.safe_dr);
  } catch (const ArgumentError& e) {
    throw ArgumentError(std::string("config key 'safe_dr.delta/safe_dr.z': ") + e.what());
  }

  if (kv.Has("prpo.delta_fn")) {
    try {
      cfg.prpo_schedule = ClipSchedule::Parse(kv.Take("prpo.delta_fn", ""));
    } catch (const ArgumentError& e) {
      throw ArgumentError(std::string("config key 'prpo.delta_fn': ") + e.what());
    }
  } else if (kv.Has("prpo.delta")) {
    cfg.prpo_schedule = ClipSchedule::Static(kv.TakeDouble("prpo.delta", 1.0));
  }

  cfg.n_grid.clear();
  for (const std::string& item : kv.TakeList("sweep.n_grid", "100,1000,10000,100000,1000000")) {
    try {
      cfg.n_grid.push_back(std::stol(item));
    } catch (const std::exception&) {
      throw ArgumentError("config key 'sweep.n_grid': cannot parse '" + item + "'");
    }
  }
  for (size_t i = 0; i + 1 < cfg.n_grid.size(); ++i) {
    if (cfg.n_grid[i] >= cfg.n_grid[i + 1]) {
      throw ArgumentError("config key 'sweep.n_grid': must be strictly increasing");
    }
  }
  if (cfg.n_grid.empty() || cfg.n_grid.front() < 1) {
    throw ArgumentError("config key 'sweep.n_grid': need positive sizes");
  }

  cfg.methods.clear();
  for (const std::string& item : kv.TakeList("sweep.methods", "ips,dr,safe_dr,prpo")) {
    cfg.methods.push_back(ParseSweepMethod(item));
  }
  cfg.seeds.clear();
  for (const std::string& item : kv.TakeList("sweep.seeds", "1,2,3")) {
    try {
      cfg.seeds.push_back(std::stoull(item));
    } catch (const std::exception&) {
      throw ArgumentError("config key 'sweep.seeds': cannot parse '" + item + "'");
    }
  }

  cfg.eval_samples = static_cast<int>(kv.TakeLong("eval.samples", cfg.eval_samples));
  cfg.eval_seed =
      static_cast<uint64_t>(kv.TakeLong("eval.seed", static_cast<long>(cfg.eval_seed)));
  const std::string gain = kv.Take("eval.gain", "exponential");
  if (gain == "exponential") {
    cfg.exponential_gain = true;
  } else if (gain == "linear") {
    cfg.exponential_gain = false;
  } else {
    throw ArgumentError("config key 'eval.gain': expected exponential|linear");
  }
  cfg.out = kv.Take("out", cfg.out);
  cfg.threads = static_cast<int>(kv.TakeLong("threads", cfg.threads));
  if (cfg.threads < 1) throw ArgumentError("config key 'threads': must be >= 1");

  kv.FinishOrThrow();
  return cfg;
}

ExperimentConfig ExperimentConfig::ParseFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open config file " + path);
  return Parse(in);
}

std::string FormatSweepRow(const SweepRow& row) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s,%ld,%llu,%.6f,%.6f,%.6f,%.6f",
                row.method.c_str(), row.n,
                static_cast<unsigned long long>(row.seed), row.ndcg_at_5,
                row.true_utility, row.logging_ndcg, row.skyline_ndcg);
  return buf;
}

void EnsureStatsSupport(LoggingStats& stats, const ClickLog& log,
                        const PolicyParams& logging, const QueryIndex& queries,
                        const BiasParams& bias, int k, int base_samples,
                        uint64_t seed) {
  // Presented documents with a zero propensity estimate, per query.
  std::set<int> offending;
  for (const ClickLogEntry& entry : log.entries) {
    const QueryLoggingStats& qs = stats.at(entry.query_id);
    for (const int doc_id : entry.presented.positions) {
      for (size_t i = 0; i < qs.doc_ids.size(); ++i) {
        if (qs.doc_ids[i] == doc_id && qs.rho0[i] == 0.0) {
          offending.insert(entry.query_id);
          break;
        }
      }
    }
  }
  for (const int query_id : offending) {
    // Presented documents of this query across the whole log.
    std::set<int> presented;
    for (const ClickLogEntry& entry : log.entries) {
      if (entry.query_id != query_id) continue;
      presented.insert(entry.presented.positions.begin(),
                       entry.presented.positions.end());
    }
    const Query& query = queries.at(query_id);
    long samples = base_samples;
    for (int attempt = 0;; ++attempt) {
      if (attempt >= 12) {
        throw InternalError("could not certify positive propensities for "
                            "query " + std::to_string(query_id));
      }
      samples *= 2;
      const LoggingStats candidate = EstimateLoggingStats(
          logging, {query}, bias, k,
          EvalMode::Sampled(static_cast<int>(std::min<long>(samples, 1 << 20)),
                            DeriveSeed(seed, {static_cast<uint64_t>(query_id),
                                              static_cast<uint64_t>(attempt)})));
      const QueryLoggingStats& qs = candidate.at(query_id);
      bool covered = true;
      for (size_t i = 0; i < qs.doc_ids.size() && covered; ++i) {
        if (presented.count(qs.doc_ids[i]) > 0 && qs.rho0[i] == 0.0) covered = false;
      }
      if (covered) {
        stats.by_query[query_id] = qs;
        break;
      }
    }
  }
}

std::vector<SweepRow> RunSweep(const ExperimentConfig& cfg, const std::string& csv_path) {
  if (cfg.methods.empty() || cfg.seeds.empty()) {
    throw ArgumentError("sweep needs at least one method and one seed");
  }

  Dataset dataset = cfg.dataset_path.empty()
                        ? GenerateSynthetic(cfg.num_queries, cfg.docs_per_query,
                                            cfg.feature_dim, cfg.dataset_seed)
                        : LoadDatasetDir(cfg.dataset_path);
  if (cfg.standardize) StandardizeFeatures(dataset);
  SelectProductionSubset(dataset, cfg.production_fraction, cfg.production_seed);

  const RankWeightFn dcg = DcgWeight(cfg.k);
  const PolicyParams production = TrainSupervised(
      LabeledSubset(dataset), cfg.production_epochs,
      {cfg.production_learning_rate, 0.0}, cfg.production_seed, dcg, cfg.k);
  const PolicyParams logging = MakeLoggingPolicy(production, cfg.logging_temperature);
  const PolicyParams skyline =
      TrainSupervised(dataset.train, cfg.skyline_epochs,
                      {cfg.skyline_learning_rate, 0.0}, cfg.skyline_seed, dcg, cfg.k);

  SweepShared shared;
  shared.cfg = &cfg;
  shared.dataset = &dataset;
  const QueryIndex train_index(dataset.train);
  const QueryIndex validation_index(dataset.validation);
  shared.train_index = &train_index;
  shared.validation_index = &validation_index;
  shared.logging = logging;
  shared.train_weight_fn = cfg.train_weight == TrainWeightKind::kExposure
                               ? ExposureWeight(cfg.bias, cfg.k)
                               : dcg;
  shared.logging_ndcg =
      NdcgAtK(logging, dataset.test, cfg.k,
              EvalMode::Sampled(cfg.eval_samples,
                                DeriveSeed(cfg.eval_seed, {kEvalNdcgStream, 0})),
              cfg.exponential_gain);
  shared.skyline_ndcg =
      NdcgAtK(skyline, dataset.test, cfg.k,
              EvalMode::Sampled(cfg.eval_samples,
                                DeriveSeed(cfg.eval_seed, {kEvalNdcgStream, 1})),
              cfg.exponential_gain);

  // The baseline rows double as reference values in every sweep row.
  SweepRow logging_row;
  logging_row.method = "logging";
  logging_row.ndcg_at_5 = shared.logging_ndcg;
  logging_row.true_utility = TrueUtility(
      logging, dataset.test, dcg, cfg.k,
      EvalMode::Sampled(cfg.eval_samples, DeriveSeed(cfg.eval_seed, {kEvalUtilStream, 0})));
  logging_row.logging_ndcg = shared.logging_ndcg;
  logging_row.skyline_ndcg = shared.skyline_ndcg;
  SweepRow skyline_row = logging_row;
  skyline_row.method = "skyline";
  skyline_row.ndcg_at_5 = shared.skyline_ndcg;
  skyline_row.true_utility = TrueUtility(
      skyline, dataset.test, dcg, cfg.k,
      EvalMode::Sampled(cfg.eval_samples, DeriveSeed(cfg.eval_seed, {kEvalUtilStream, 1})));

  // Raw statistics are shared by every N of a seed; precompute serially.
  for (const uint64_t seed : cfg.seeds) {
    if (shared.train_stats.count(seed) > 0) continue;
    shared.train_stats.emplace(
        seed, EstimateLoggingStats(
                  logging, dataset.train, cfg.bias, cfg.k,
                  EvalMode::Sampled(cfg.stats_samples,
                                    DeriveSeed(seed, {kStatsTrainStream}))));
    shared.validation_stats.emplace(
        seed, EstimateLoggingStats(
                  logging, dataset.validation, cfg.bias, cfg.k,
                  EvalMode::Sampled(cfg.stats_samples,
                                    DeriveSeed(seed, {kStatsValStream}))));
  }

  const std::map<std::string, std::string> existing = ReadExistingRows(csv_path);

  struct Group {
    long n = 0;
    uint64_t seed = 0;
    bool done = false;
    std::vector<std::string> lines;   // formatted rows, method order
    std::vector<SweepRow> parsed;
  };
  std::vector<Group> groups;
  for (const long n : cfg.n_grid) {
    for (const uint64_t seed : cfg.seeds) {
      groups.push_back(Group{n, seed});
    }
  }

  auto compute_group = [&](Group& group) {
    std::vector<SweepMethod> missing;
    for (const SweepMethod method : cfg.methods) {
      if (existing.count(RowKey(ToString(method), group.n, group.seed)) == 0) {
        missing.push_back(method);
      }
    }
    std::map<std::string, SweepRow> fresh;
    if (!missing.empty()) {
      for (SweepRow& row : ComputeGroup(shared, group.n, group.seed, missing)) {
        fresh.emplace(row.method, std::move(row));
      }
    }
    for (const SweepMethod method : cfg.methods) {
      const std::string key = RowKey(ToString(method), group.n, group.seed);
      if (const auto it = existing.find(key); it != existing.end()) {
        group.lines.push_back(it->second);
        group.parsed.push_back(ParseSweepRowLine(it->second));
      } else {
        const SweepRow& row = fresh.at(ToString(method));
        group.lines.push_back(FormatSweepRow(row));
        group.parsed.push_back(row);
      }
    }
  };

  std::ofstream out(csv_path, std::ios::trunc);
  if (!out) throw ArgumentError("cannot write sweep output " + csv_path);
  auto emit_line = [&out](const std::string& line) {
    out << line << '\n';
    out.flush();
  };
  emit_line(kSweepCsvHeader);

  std::vector<SweepRow> rows;
  auto emit_baseline = [&](const SweepRow& row) {
    const std::string key = RowKey(row.method, row.n, row.seed);
    if (const auto it = existing.find(key); it != existing.end()) {
      emit_line(it->second);
      rows.push_back(ParseSweepRowLine(it->second));
    } else {
      emit_line(FormatSweepRow(row));
      rows.push_back(row);
    }
  };
  emit_baseline(logging_row);
  emit_baseline(skyline_row);

  if (cfg.threads <= 1 || groups.size() <= 1) {
    for (Group& group : groups) {
      compute_group(group);
      for (const std::string& line : group.lines) emit_line(line);
      rows.insert(rows.end(), group.parsed.begin(), group.parsed.end());
    }
    return rows;
  }

  // Worker pool over groups; the writer emits results in canonical order,
  // so the file bytes do not depend on the thread count.
  std::mutex mutex;
  std::condition_variable cv;
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const size_t index = next.fetch_add(1);
      if (index >= groups.size()) return;
      compute_group(groups[index]);
      {
        std::lock_guard<std::mutex> lock(mutex);
        groups[index].done = true;
      }
      cv.notify_all();
    }
  };
  std::vector<std::thread> pool;
  const int num_workers = std::min<int>(cfg.threads, static_cast<int>(groups.size()));
  pool.reserve(static_cast<size_t>(num_workers));
  for (int t = 0; t < num_workers; ++t) pool.emplace_back(worker);
  for (Group& group : groups) {
    std::unique_lock<std::mutex> lock(mutex);
    cv.wait(lock, [&group] { return group.done; });
    lock.unlock();
    for (const std::string& line : group.lines) emit_line(line);
    rows.insert(rows.end(), group.parsed.begin(), group.parsed.end());
  }
  for (std::thread& t : pool) t.join();
  return rows;
}

std::vector<Fig1Row> Fig1Curves(double eps_base, const std::vector<int>& original_ranks,
                                int max_new_rank) {
  if (!(eps_base >= 1.0)) throw ArgumentError("eps_base must be >= 1");
  if (max_new_rank < 1) throw ArgumentError("max_new_rank must be >= 1");
  const ClipRange range{1.0 / eps_base, eps_base};
  std::vector<Fig1Row> rows;
  for (const int a : original_ranks) {
    if (a < 1) throw ArgumentError("ranks must be >= 1");
    const double original_weight = 1.0 / std::log2(static_cast<double>(a) + 1.0);
    for (int b = 1; b <= max_new_rank; ++b) {
      const double new_weight = 1.0 / std::log2(static_cast<double>(b) + 1.0);
      Fig1Row row;
      row.original_rank = a;
      row.new_rank = b;
      row.ratio = new_weight / original_weight;
      row.clipped_pos = ClipWeight(row.ratio, range, 1.0);
      row.clipped_neg = ClipWeight(row.ratio, range, -1.0);
      rows.push_back(row);
    }
  }
  return rows;
}

void WriteFig1Table(const std::vector<Fig1Row>& rows, std::ostream& out) {
  out << "original_rank\tnew_rank\tratio\tunclipped_pos\tclipped_pos\t"
         "unclipped_neg\tclipped_neg\n";
  char buf[224];
  for (const Fig1Row& row : rows) {
    std::snprintf(buf, sizeof(buf), "%d\t%d\t%.10g\t%.10g\t%.10g\t%.10g\t%.10g\n",
                  row.original_rank, row.new_rank, row.ratio, row.ratio,
                  row.clipped_pos, -row.ratio, row.clipped_neg);
    out << buf;
  }
}

}  // namespace ranksafe
