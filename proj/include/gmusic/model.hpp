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

#ifndef GMUSIC_MODEL_HPP
#define GMUSIC_MODEL_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "gmusic/types.hpp"

namespace gmusic::model {

inline constexpr std::uint64_t kDefaultSourceSeed = 0x5EEDULL;

/// Condition number of A*A above which steering columns are rejected.
inline constexpr double kMaxGramCondition = 1e12;

/// How the deterministic source matrix S is drawn.
enum class SourceModel {
  /// S(k, n) = sqrt(p_k) exp(i phi_kn) with phi_kn uniform on [0, 2 pi).
  kRandomPhase,
  /// S chosen so that the nonzero eigenvalues of B B* equal `powers` exactly.
  kExactEigenvalues,
};

struct ScenarioConfig {
  int M = 0;
  int N = 0;
  std::vector<double> angles;
  /// Per-source power, or target eigenvalues of B B* for kExactEigenvalues.
  std::vector<double> powers;
  double sigma2 = 1.0;
  std::uint64_t source_seed = kDefaultSourceSeed;
  SourceModel source_model = SourceModel::kRandomPhase;
  /// Upper bound on the spectral norm of B.
  double norm_bound = 1e6;
};

/// Uniform linear array scenario with K deterministic sources. Immutable
/// once built.
struct Scenario {
  int M = 0;
  int N = 0;
  int K = 0;
  std::vector<double> angles;  // ascending
  double sigma2 = 0.0;
  CMatrix source_matrix;    // K x N
  CMatrix steering_matrix;  // M x K
  CMatrix B;                // M x N, A S / sqrt(N)

  [[nodiscard]] double c() const { return static_cast<double>(M) / N; }
};

struct Observation {
  CMatrix sigma_matrix;  // B + W, M x N
  std::uint64_t seed = 0;
};

/// Exact noise-subspace quantities of a scenario.
class GroundTruth {
 public:
  explicit GroundTruth(const Scenario& scenario);

  /// Orthogonal projector on the kernel of B B*.
  [[nodiscard]] const CMatrix& noise_projector() const { return projector_; }

  /// eta(theta) = 1 - a* A (A*A)^-1 A* a, clamped to [0, 1].
  [[nodiscard]] double eta(double theta) const;

 private:
  int M_;
  CMatrix steering_;
  CMatrix gram_inverse_;
  CMatrix projector_;
};

/// a(theta) = M^{-1/2} (1, e^{i theta}, ..., e^{i (M-1) theta})^T.
CVector steering(double theta, int M);

/// Columns a(theta_k).
CMatrix steering_matrix(std::span<const double> angles, int M);

Scenario build_scenario(const ScenarioConfig& config);

/// Sigma = B + W with W(i, j) ~ CN(0, sigma2 / N). Entries are filled
/// column by column (snapshot-major), each from one Box-Muller pair.
Observation sample_observation(const Scenario& scenario, std::uint64_t seed);

double true_eta(const Scenario& scenario, double theta);

GroundTruth true_projector(const Scenario& scenario);

/// q_M(alpha) = (1/M) sum_{k=1}^{M} exp(-i 2 pi k alpha), summed directly.
Complex exp_sum_q(double alpha, int M);

/// Eigenvalues of B B*, ascending, with numerically null ones snapped to 0.
RVector signal_eigenvalues(const Scenario& scenario);

}  // namespace gmusic::model

#endif  // GMUSIC_MODEL_HPP
