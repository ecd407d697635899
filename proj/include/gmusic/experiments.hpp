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

#ifndef GMUSIC_EXPERIMENTS_HPP
#define GMUSIC_EXPERIMENTS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gmusic/estimator.hpp"
#include "gmusic/model.hpp"

// Monte Carlo harness. Each run sweeps N over N_list with M = round(c N),
// draws `trials` noise realizations per N from seeds
// derive_seed(base_seed, N, trial) and reports order statistics per metric.
namespace gmusic::experiments {

inline constexpr std::uint64_t kDefaultBaseSeed = 20240601ULL;

struct ExperimentConfig {
  double c = 0.5;
  std::vector<double> angles{0.2, 0.5};
  std::vector<double> powers{1.0, 1.0};
  /// Noise level. When absent, sigma2 = lambda_min(B B*) / (threshold_factor sqrt(c_N)).
  std::optional<double> sigma2;
  double threshold_factor = 4.0;
  std::vector<int> N_list{40, 80, 160, 320};
  int trials = 50;
  std::uint64_t base_seed = kDefaultBaseSeed;
  /// Seed of the source matrix; S is frozen per N.
  std::uint64_t scenario_seed = model::kDefaultSourceSeed;
  model::SourceModel source_model = model::SourceModel::kRandomPhase;
  /// Pseudo-spectrum grid size; 0 selects min(N^2, grid_cap).
  int grid_size = 0;
  int grid_cap = 20000;
  estimator::WeightMethod method = estimator::WeightMethod::kResidue;
  /// Half-width of the DoA search intervals; 0 selects 0.45 x minimum spacing.
  double interval_half_width = 0.0;
  /// The contour is built from B B* eigenvalues multiplied by this factor.
  /// Values other than 1 give a deliberately mismatched contour.
  double contour_signal_scale = 1.0;
  /// Angle tolerance of the DoA refinement.
  double tol = 1e-10;
  int threads = 1;
};

/// Throws InvalidArgument on inconsistent settings.
void validate(const ExperimentConfig& cfg);

struct ReportRow {
  std::string experiment;
  int N = 0;
  int M = 0;
  int K = 0;
  int trial_count = 0;
  std::string metric;
  int source_index = -1;  // -1 when the metric is not per source
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  int failures = 0;
  std::uint64_t seed = 0;
};

/// Rows in N_list order, metrics in a fixed order per experiment. Event
/// metrics (names ending in _count) carry the number of trials in which the
/// event occurred in all three statistic columns.
struct ExperimentReport {
  std::vector<ReportRow> rows;

  /// Median of `metric` at N, NaN if absent.
  [[nodiscard]] double median(const std::string& metric, int N, int source_index = -1) const;
};

/// sup over the grid of |eta_tilde - eta| and |eta_hat - eta|.
ExperimentReport run_uniform_consistency(const ExperimentConfig& cfg);

/// N |theta_k - theta| for the improved and classical interval estimates,
/// and the angular RMSE of both.
ExperimentReport run_doa_consistency(const ExperimentConfig& cfg);

/// Escape events of lambda_hat (e1) and omega_hat (e2) from the band
/// T_eps, violations of card{k : lambda_hat_k < t1+} = M - K, and of the
/// ordering t1- < lambda_1 < omega_1 < ... < omega_M < t2+.
ExperimentReport run_escape_diagnostics(const ExperimentConfig& cfg);

enum class ReportFormat { kCsv, kJson };

inline constexpr const char* kCsvHeader =
    "experiment,N,M,K,trial_count,metric,source_index,median,q25,q75,failures,seed";

std::string format_report(const ExperimentReport& report, ReportFormat format);

/// Writes to `path`, or to standard output when path is empty or "-".
void emit_report(const ExperimentReport& report, ReportFormat format, const std::string& path);

/// Inverse of the JSON form of format_report.
ExperimentReport parse_json_report(const std::string& text);

/// Reads a config JSON document; unknown keys and type errors raise
/// ParseError naming the JSON pointer of the offending field.
ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);

}  // namespace gmusic::experiments

#endif  // GMUSIC_EXPERIMENTS_HPP
