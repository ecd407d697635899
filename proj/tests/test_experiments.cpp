// SPDX-License-Identifier: Apache-2.0
//
// gmusic - subspace direction-of-arrival estimation for large arrays
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include <doctest.h>

#include <cmath>
#include <set>

#include "gmusic/error.hpp"
#include "gmusic/experiments.hpp"

using namespace gmusic;
using namespace gmusic::experiments;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.N_list = {40};
  cfg.trials = 4;
  cfg.grid_cap = 400;
  return cfg;
}

int count_lines(const std::string& s) {
  int n = 0;
  for (char ch : s) n += ch == '\n';
  return n;
}

}  // namespace

TEST_CASE("consistency report schema") {
  const auto cfg = small_config();
  const auto report = run_uniform_consistency(cfg);
  std::set<std::string> metrics;
  for (const auto& r : report.rows) {
    CHECK(r.experiment == "uniform_consistency");
    CHECK(r.N == 40);
    CHECK(r.M == 20);
    CHECK(r.K == 2);
    CHECK(r.trial_count == 4);
    CHECK(r.seed == cfg.base_seed);
    CHECK(r.q25 <= r.median);
    CHECK(r.median <= r.q75);
    metrics.insert(r.metric);
  }
  CHECK(metrics.count("sup_err_improved") == 1);
  CHECK(metrics.count("sup_err_classical") == 1);
  CHECK(report.median("grid_size", 40) == 400.0);
  CHECK(report.median("sup_err_improved", 40) < report.median("sup_err_classical", 40));
}

TEST_CASE("doa report carries one row per source") {
  auto cfg = small_config();
  const auto report = run_doa_consistency(cfg);
  CHECK(std::isfinite(report.median("n_abs_err_improved", 40, 0)));
  CHECK(std::isfinite(report.median("n_abs_err_improved", 40, 1)));
  CHECK(std::isfinite(report.median("angular_rmse_classical", 40)));
  CHECK(std::isnan(report.median("n_abs_err_improved", 40, 2)));
}

TEST_CASE("escape counts are bounded by the trial count") {
  auto cfg = small_config();
  const auto report = run_escape_diagnostics(cfg);
  for (const auto& r : report.rows) {
    CHECK(r.median >= 0.0);
    CHECK(r.median <= r.trial_count);
  }
  const double band = report.median("band_escape_count", 40);
  CHECK(band >= report.median("escape_e1_count", 40));
  CHECK(band >= report.median("count_identity_violation_count", 40));
}

TEST_CASE("separation failure marks every trial") {
  auto cfg = small_config();
  cfg.threshold_factor = 0.5;
  const auto report = run_escape_diagnostics(cfg);
  CHECK(report.median("separation_violated_count", 40) == 4.0);
  for (const auto& r : report.rows) CHECK(r.failures == 4);
}

TEST_CASE("reports are identical across thread counts") {
  auto cfg = small_config();
  const auto one = format_report(run_uniform_consistency(cfg), ReportFormat::kCsv);
  cfg.threads = 3;
  const auto three = format_report(run_uniform_consistency(cfg), ReportFormat::kCsv);
  CHECK(one == three);
}

TEST_CASE("csv layout") {
  ExperimentReport empty;
  CHECK(format_report(empty, ReportFormat::kCsv) == std::string(kCsvHeader) + "\n");
  ExperimentReport r;
  r.rows.push_back({"x", 10, 5, 1, 3, "m", -1, 0.1, std::nan(""), 1.0, 0, 7});
  const auto text = format_report(r, ReportFormat::kCsv);
  CHECK(count_lines(text) == 2);
  CHECK(text.find("x,10,5,1,3,m,-1,0.10000000000000001,nan,1,0,7\n") != std::string::npos);
}

TEST_CASE("json report round trip") {
  ExperimentReport r;
  r.rows.push_back({"x", 10, 5, 1, 3, "m", 0, 0.1, std::nan(""), 1.0, 2, 18446744073709551615ull});
  const auto back = parse_json_report(format_report(r, ReportFormat::kJson));
  REQUIRE(back.rows.size() == 1);
  const auto& row = back.rows[0];
  CHECK(row.experiment == "x");
  CHECK(row.median == 0.1);
  CHECK(std::isnan(row.q25));
  CHECK(row.failures == 2);
  CHECK(row.seed == 18446744073709551615ull);
}

TEST_CASE("config round trip") {
  ExperimentConfig cfg;
  cfg.sigma2 = 0.25;
  cfg.N_list = {20, 60};
  cfg.method = estimator::WeightMethod::kQuadrature;
  cfg.source_model = model::SourceModel::kExactEigenvalues;
  const auto back = config_from_json(config_to_json(cfg));
  CHECK(back.sigma2 == cfg.sigma2);
  CHECK(back.N_list == cfg.N_list);
  CHECK(back.method == cfg.method);
  CHECK(back.source_model == cfg.source_model);
  CHECK(config_to_json(back) == config_to_json(cfg));
}

TEST_CASE("config errors name the offending field") {
  auto message = [](const std::string& text) {
    try {
      config_from_json(text);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kParseError);
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message(R"({"angles": [0.1, "x"]})").find("/angles/1") != std::string::npos);
  CHECK(message(R"({"trials": 2.5})").find("/trials") != std::string::npos);
  CHECK(message(R"({"bogus": 1})").find("/bogus") != std::string::npos);
  CHECK(message(R"({"method": "simpson"})").find("/method") != std::string::npos);
  CHECK_FALSE(message("{").empty());
  CHECK_FALSE(message(R"({"c": 1.5})").empty());
}

TEST_CASE("invalid configs are rejected") {
  ExperimentConfig cfg;
  cfg.N_list = {40, 40};
  CHECK_THROWS_AS(validate(cfg), Error);
  cfg = ExperimentConfig{};
  cfg.N_list = {7};
  cfg.c = 0.3;
  CHECK_THROWS_AS(run_uniform_consistency(cfg), Error);
}

TEST_CASE("noiseless doa run recovers the angles") {
  auto cfg = small_config();
  cfg.sigma2 = 0.0;
  cfg.tol = 1e-12;
  const auto report = run_doa_consistency(cfg);
  CHECK(report.median("n_abs_err_improved", 40, 0) <= 40 * 1e-9);
  CHECK(report.median("n_abs_err_improved", 40, 1) <= 40 * 1e-9);
}

TEST_CASE("base seed changes values but not the schema") {
  auto cfg = small_config();
  const auto a = run_uniform_consistency(cfg);
  cfg.base_seed += 1;
  const auto b = run_uniform_consistency(cfg);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) CHECK(a.rows[i].metric == b.rows[i].metric);
  CHECK(a.median("sup_err_improved", 40) != b.median("sup_err_improved", 40));
}
