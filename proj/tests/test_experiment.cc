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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "ranksafe/errors.h"

using namespace ranksafe;

namespace {

ExperimentConfig ParseConfigText(const std::string& text) {
  std::istringstream in(text);
  return ExperimentConfig::Parse(in);
}

// A deliberately tiny grid that still exercises every method.
const char* kTinyConfig =
    "dataset.num_queries = 30\n"
    "dataset.docs_per_query = 5\n"
    "dataset.feature_dim = 4\n"
    "dataset.seed = 3\n"
    "production.fraction = 0.2\n"
    "production.epochs = 8\n"
    "skyline.epochs = 12\n"
    "k = 3\n"
    "stats.samples = 200\n"
    "train.epochs = 4\n"
    "train.patience = 4\n"
    "train.validation_samples = 32\n"
    "eval.samples = 100\n"
    "sweep.n_grid = 40,80\n"
    "sweep.methods = ips,dr,safe_dr,prpo\n"
    "sweep.seeds = 1,2\n";

std::string ReadFile(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::string TempPath(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("experiment config parsing") {
  SUBCASE("defaults are filled in") {
    const ExperimentConfig cfg = ParseConfigText("");
    CHECK(cfg.k == 5);
    CHECK(cfg.n_grid == std::vector<long>{100, 1000, 10000, 100000, 1000000});
    CHECK(cfg.methods.size() == 4);
    CHECK(cfg.safe_dr.delta == 0.95);
    CHECK(cfg.bias.alpha == std::vector<double>{0.35, 0.53, 0.55, 0.54, 0.52});
    CHECK(cfg.bias.beta == std::vector<double>{0.65, 0.26, 0.15, 0.11, 0.08});
  }
  SUBCASE("values, lists, and comments are consumed") {
    const ExperimentConfig cfg = ParseConfigText(
        "# comment\n"
        "k = 3\n"
        "sweep.n_grid = 10,20,30  # inline comment\n"
        "sweep.methods = prpo\n"
        "prpo.delta_fn = 100/N\n"
        "click.model = adversarial\n");
    CHECK(cfg.k == 3);
    CHECK(cfg.n_grid == std::vector<long>{10, 20, 30});
    CHECK(cfg.methods == std::vector<SweepMethod>{SweepMethod::kPrpo});
    CHECK(cfg.click_model == ClickModelKind::kAdversarial);
    CHECK(cfg.prpo_schedule.ToString() == "100/N");
  }
  SUBCASE("errors name the offending key") {
    CHECK_THROWS_WITH_AS(ParseConfigText("sweep.n_grid = 10,banana\n"),
                         doctest::Contains("sweep.n_grid"), ArgumentError);
    CHECK_THROWS_WITH_AS(ParseConfigText("train.weight = sigmoid\n"),
                         doctest::Contains("train.weight"), ArgumentError);
    CHECK_THROWS_WITH_AS(ParseConfigText("totally.unknown = 1\n"),
                         doctest::Contains("totally.unknown"), ArgumentError);
    CHECK_THROWS_AS(ParseConfigText("sweep.n_grid = 30,20\n"), ArgumentError);
    CHECK_THROWS_AS(ParseConfigText("sweep.methods = gradient_boost\n"),
                    ArgumentError);
    CHECK_THROWS_AS(ParseConfigText("k = 3\nk = 4\n"), ParseError);
  }
}

TEST_CASE("clipped-ratio curve table") {
  const std::vector<Fig1Row> rows = Fig1Curves(1.15, {1, 10}, 10);
  REQUIRE(rows.size() == 20);

  SUBCASE("anchor values") {
    // Moving rank 10 -> 1 has ratio log2(11)/log2(2), clipped at 1.15.
    const Fig1Row* up = nullptr;
    const Fig1Row* down = nullptr;
    for (const Fig1Row& row : rows) {
      if (row.original_rank == 10 && row.new_rank == 1) up = &row;
      if (row.original_rank == 1 && row.new_rank == 10) down = &row;
    }
    REQUIRE(up != nullptr);
    REQUIRE(down != nullptr);
    CHECK(up->ratio == doctest::Approx(std::log2(11.0)).epsilon(1e-12));
    CHECK(up->clipped_pos == doctest::Approx(1.15).epsilon(1e-15));
    CHECK(down->ratio == doctest::Approx(1.0 / std::log2(11.0)).epsilon(1e-12));
    CHECK(down->ratio == doctest::Approx(0.28906).epsilon(1e-4));
    // Below one the positive branch is not clipped by the upper bound.
    CHECK(down->clipped_pos == doctest::Approx(down->ratio).epsilon(1e-15));
    // The negative branch is floored at -eps_minus.
    CHECK(down->clipped_neg == doctest::Approx(-1.0 / 1.15).epsilon(1e-12));
  }

  SUBCASE("curves are flat exactly beyond the thresholds") {
    for (const Fig1Row& row : rows) {
      if (row.ratio > 1.15) {
        CHECK(row.clipped_pos == 1.15);
      } else {
        CHECK(row.clipped_pos == row.ratio);
      }
      if (row.ratio < 1.0 / 1.15) {
        CHECK(row.clipped_neg == doctest::Approx(-1.0 / 1.15).epsilon(1e-15));
      } else {
        CHECK(row.clipped_neg == -row.ratio);
      }
    }
  }

  SUBCASE("the emitted table is byte stable") {
    std::ostringstream a, b;
    WriteFig1Table(rows, a);
    WriteFig1Table(Fig1Curves(1.15, {1, 10}, 10), b);
    CHECK(a.str() == b.str());
    CHECK(a.str().find("original_rank\tnew_rank") == 0);
  }

  SUBCASE("argument validation") {
    CHECK_THROWS_AS(Fig1Curves(0.9, {1}, 5), ArgumentError);
    CHECK_THROWS_AS(Fig1Curves(1.15, {0}, 5), ArgumentError);
    CHECK_THROWS_AS(Fig1Curves(1.15, {1}, 0), ArgumentError);
  }
}

TEST_CASE("sweep runs are deterministic, parallel-safe, and resumable") {
  const ExperimentConfig base = ParseConfigText(kTinyConfig);
  const std::string path_a = TempPath("ranksafe_sweep_a.csv");
  const std::string path_b = TempPath("ranksafe_sweep_b.csv");
  std::filesystem::remove(path_a);
  std::filesystem::remove(path_b);

  const std::vector<SweepRow> rows_a = RunSweep(base, path_a);

  SUBCASE("rows cover baselines and the full grid") {
    // logging + skyline + 2 Ns * 2 seeds * 4 methods.
    CHECK(rows_a.size() == 2 + 2 * 2 * 4);
    CHECK(rows_a[0].method == "logging");
    CHECK(rows_a[1].method == "skyline");
    for (const SweepRow& row : rows_a) {
      CHECK(row.ndcg_at_5 >= 0.0);
      CHECK(row.ndcg_at_5 <= 1.0);
      // The skyline sees the true labels; it dominates the logging policy.
      CHECK(row.skyline_ndcg >= row.logging_ndcg);
    }
  }

  SUBCASE("equal configs produce byte-identical CSV files") {
    RunSweep(base, path_b);
    CHECK(ReadFile(path_a) == ReadFile(path_b));
  }

  SUBCASE("two worker threads produce the same bytes as one") {
    ExperimentConfig threaded = base;
    threaded.threads = 2;
    RunSweep(threaded, path_b);
    CHECK(ReadFile(path_a) == ReadFile(path_b));
  }

  SUBCASE("a truncated file is resumed to identical bytes") {
    const std::string full = ReadFile(path_a);
    // Keep the header plus the first five complete rows, cutting the last
    // one mid-line.
    size_t offset = 0;
    for (int newline = 0; newline < 6; ++newline) {
      offset = full.find('\n', offset) + 1;
    }
    std::ofstream partial(path_b, std::ios::trunc);
    partial << full.substr(0, offset) << "prpo,40,2,0.51";  // interrupted row
    partial.close();
    RunSweep(base, path_b);
    CHECK(ReadFile(path_b) == full);
  }

  std::filesystem::remove(path_a);
  std::filesystem::remove(path_b);
}
