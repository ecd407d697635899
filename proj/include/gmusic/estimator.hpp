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

#ifndef GMUSIC_ESTIMATOR_HPP
#define GMUSIC_ESTIMATOR_HPP

#include <functional>
#include <vector>

#include "gmusic/rmt.hpp"
#include "gmusic/spectrum.hpp"
#include "gmusic/types.hpp"

// Subspace pseudo-spectra and direction extraction.
//
// Both estimators are weighted sums sum_j rho_j |a(theta)* u_j|^2 over the
// eigenvectors of Sigma Sigma*. Classical MUSIC uses the 0/1 indicator of
// the M - K smallest eigenvalues. The improved estimator takes
//   rho_j = (1 / 2 pi i) \oint_{dR^-} g(z) / (lambda_j - z) dz,
// with g = w'/b from spectrum.hpp and dR^- the clockwise boundary of the
// contour rectangle.
namespace gmusic::estimator {

enum class WeightMethod { kResidue, kQuadrature };

struct WeightVector {
  RVector rho;   // real parts
  RVector imag;  // imaginary parts, a round-off diagnostic
};

struct WeightOptions {
  /// Raise PoleTooClose when a pole lies within 3 eps of the contour.
  bool check_pole_margin = true;
  int residue_nodes = 64;
  double quadrature_tol = 1e-10;
  int max_nodes_per_side = 1 << 14;
};

/// sum_{j <= M - K} |a(theta)* u_j|^2.
double classical_eta(const spectrum::SpectralDecomposition& spec, int K, double theta);

/// Indicator weights of the M - K smallest eigenvalues.
WeightVector classical_weights(const spectrum::SpectralDecomposition& spec, int K);

WeightVector improved_weights(const spectrum::SpectralDecomposition& spec,
                              const rmt::ContourSpec& contour,
                              WeightMethod method = WeightMethod::kResidue,
                              const WeightOptions& options = {});

/// Population analogue: (1 / 2 pi i) \oint_{dR^-} w'(z) / (lambda_k - w(z)) dz
/// for each eigenvalue of B B*, by the same rectangle quadrature. Close to 1
/// for the zero eigenvalues and 0 for the others when the contour separates.
RVector deterministic_weights(const rmt::DeterministicInput& input,
                              const rmt::ContourSpec& contour,
                              const WeightOptions& options = {});

/// sum_j rho_j |a(theta)* u_j|^2, evaluated directly.
double improved_eta(const WeightVector& weights, const spectrum::SpectralDecomposition& spec,
                    double theta);

/// theta -> a(theta)* P a(theta) for a fixed Hermitian P, stored as the
/// trigonometric polynomial (1/M) [s_0 + 2 Re sum_{d >= 1} s_d e^{-i d theta}]
/// with s_d the d-th subdiagonal sum of P. O(M) per evaluation.
class QuadraticForm {
 public:
  QuadraticForm() = default;
  QuadraticForm(const spectrum::SpectralDecomposition& spec, const RVector& rho);

  [[nodiscard]] double operator()(double theta) const;
  [[nodiscard]] int M() const { return static_cast<int>(diag_sums_.size()); }

 private:
  CVector diag_sums_;
};

struct PseudoSpectrum {
  RVector grid;  // ascending, in [-pi, pi)
  RVector values_classical;
  RVector values_improved;
  int M = 0;
};

/// theta_k = -pi + 2 pi k / G, k = 0..G-1.
RVector uniform_grid(int G);

/// min(N^2, cap) with N = M / c rounded.
int default_grid_size(const spectrum::SpectralDecomposition& spec, int cap = 20000);

/// Both pseudo-spectra on `grid`. Every grid point is evaluated
/// independently, so values do not depend on how the grid is split.
PseudoSpectrum pseudo_spectrum(const spectrum::SpectralDecomposition& spec, int K,
                               const WeightVector& weights, const RVector& grid);

using Evaluator = std::function<double(double)>;

struct AngleInterval {
  double lo = 0.0;
  double hi = 0.0;
};

struct DoAEstimates {
  std::vector<AngleInterval> intervals;
  std::vector<double> estimates;
  std::vector<double> residuals;  // |f(estimate)|
};

/// argmin of |f| on each interval: scan with step length/512, then
/// golden-section refinement to 1e-10 around the best scan point. On ties
/// the lowest angle wins. Throws EmptyInterval for zero-length intervals.
DoAEstimates extract_doas_intervals(const Evaluator& f, const std::vector<AngleInterval>& intervals,
                                    double tol = 1e-10);

/// The K deepest strict local minima of the improved values on the grid,
/// at least 2 pi / M apart, each refined by golden section of f inside its
/// bracketing cells. Estimates are returned in ascending angle. Throws
/// TooFewMinima.
DoAEstimates extract_doas_topk(const PseudoSpectrum& pspec, int K, const Evaluator& f,
                               double tol = 1e-10);

/// Golden-section minimization of f on [lo, hi] to bracket width tol.
double golden_section(const Evaluator& f, double lo, double hi, double tol);

}  // namespace gmusic::estimator

#endif  // GMUSIC_ESTIMATOR_HPP
