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

#ifndef GMUSIC_RMT_HPP
#define GMUSIC_RMT_HPP

#include <vector>

#include "gmusic/model.hpp"
#include "gmusic/types.hpp"

// Deterministic equivalents of the information-plus-noise model
// Sigma = B + W: the Stieltjes transform m(z) of the limiting spectral
// measure, the associated maps w(z) and phi(w), and the cluster structure
// of its support.
namespace gmusic::rmt {

/// Eigenvalues of B B* plus the noise level and aspect ratio.
struct DeterministicInput {
  RVector true_lambdas;  // ascending, the first M - K exactly 0
  double sigma2 = 1.0;
  double c = 0.5;

  [[nodiscard]] int M() const { return static_cast<int>(true_lambdas.size()); }
  [[nodiscard]] int K() const;
};

/// Validates and normalizes: sorts, snaps |lambda| <= 1e-12 (1 + lambda_max)
/// to 0, checks sigma2 > 0 and 0 < c < 1.
DeterministicInput make_input(RVector lambdas, double sigma2, double c);

/// Uses the eigenvalues of B B* and c_N = M / N of the scenario.
DeterministicInput make_input(const model::Scenario& scenario);

struct Cluster {
  double w_minus = 0.0;
  double w_plus = 0.0;
  double x_minus = 0.0;
  double x_plus = 0.0;
};

struct SupportProfile {
  std::vector<Cluster> clusters;
  /// association[k] = cluster index (0-based) of true_lambdas(k).
  std::vector<int> association;
  RVector lambdas;
  int K = 0;

  [[nodiscard]] int Q() const { return static_cast<int>(clusters.size()); }
};

struct SeparationReport {
  bool a5 = false;  // no signal eigenvalue associated to the first cluster
  bool a6 = false;  // first cluster is positive and isolated
  double a5_margin = 0.0;        // lambda_{M-K+1} - w_1^+ (+inf when K = 0)
  double a6_left_margin = 0.0;   // x_1^-
  double a6_gap_margin = 0.0;    // x_2^- - x_1^+ (+inf when Q = 1)

  [[nodiscard]] bool separated() const { return a5 && a6; }
};

/// Thresholds t_1^-, t_1^+, t_2^-, t_2^+, margin eps and half-height y.
/// The integration rectangle is [t_1^- - 3 eps, t_1^+ + 3 eps] x [-y, y].
struct ContourSpec {
  double t1_minus = 0.0;
  double t1_plus = 0.0;
  double t2_minus = 0.0;
  double t2_plus = 0.0;
  double epsilon = 0.0;
  double y = 0.0;

  [[nodiscard]] double x_left() const { return t1_minus - 3.0 * epsilon; }
  [[nodiscard]] double x_right() const { return t1_plus + 3.0 * epsilon; }
  /// Real point strictly inside the rectangle.
  [[nodiscard]] bool encloses(double x) const { return x > x_left() && x < x_right(); }
  /// Membership in T_eps = [t1- - eps, t1+ + eps] U [t2- - eps, t2+ + eps].
  [[nodiscard]] bool in_band(double x) const;
  [[nodiscard]] bool in_first_band(double x) const;
  [[nodiscard]] bool in_second_band(double x) const;
};

/// Solution of the canonical equation
///   m = (1/M) tr[-z b I + sigma2 (1 - c) I + B B* / b]^{-1},  b = 1 + sigma2 c m,
/// in the Stieltjes class (Im m Im z > 0). Requires Im z != 0.
Complex solve_canonical(const DeterministicInput& input, Complex z);

/// |m - F(m)| / |m| for the canonical map F.
double canonical_residual(const DeterministicInput& input, Complex z, Complex m);

/// m'(z) by implicit differentiation of the canonical equation.
Complex canonical_derivative(const DeterministicInput& input, Complex z, Complex m);

/// Diagonal of T(z) in the eigenbasis of B B*:
///   t_k = 1 / (-z b + sigma2 (1 - c) + lambda_k / b).
CVector t_matrix(const DeterministicInput& input, Complex z, Complex m);

/// T(z) = U diag(t) U* for a given eigenbasis U of B B* (columns ascending).
CMatrix t_matrix(const DeterministicInput& input, Complex z, Complex m, const CMatrix& eigenbasis);

/// w(z) = z b^2 - sigma2 (1 - c) b. Real z goes through limit_to_real.
Complex w_of_z(const DeterministicInput& input, Complex z);

/// lim_{h -> 0+} m(x + i h) by continuation in h followed by a square-root
/// Richardson step 2 m(h) - m(4h), h = 1e-9.
Complex limit_to_real(const DeterministicInput& input, double x);

/// f(w) = (1/M) sum 1 / (lambda_k - w).
double f_of_w(const DeterministicInput& input, double w);

/// phi(w) = w (1 - sigma2 c f)^2 + sigma2 (1 - c) (1 - sigma2 c f).
double phi(const DeterministicInput& input, double w);
double phi_prime(const DeterministicInput& input, double w);

/// Support clusters from the non-negative local extrema of phi.
/// Throws SupportSearchFailed when no consistent set of extrema is found
/// after three grid refinements.
SupportProfile find_support(const DeterministicInput& input);

SeparationReport check_separation(const SupportProfile& profile);
SeparationReport check_separation(const SupportProfile& profile, const DeterministicInput& input);

/// Contour thresholds with gamma = 1/4. Throws SeparationViolated unless
/// both separation verdicts hold. With a single cluster (K = 0) the second
/// band is a placeholder at [1.75, 2.5] x_1^+.
ContourSpec choose_contour(const SupportProfile& profile);

/// Distance from z to the support.
double distance_to_support(const SupportProfile& profile, Complex z);

}  // namespace gmusic::rmt

#endif  // GMUSIC_RMT_HPP
