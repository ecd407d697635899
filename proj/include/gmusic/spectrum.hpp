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

#ifndef GMUSIC_SPECTRUM_HPP
#define GMUSIC_SPECTRUM_HPP

#include "gmusic/model.hpp"
#include "gmusic/types.hpp"

namespace gmusic::spectrum {

/// Eigen-structure of Sigma Sigma* together with the roots of
/// 1 + sigma2 c m_hat(z) = 0. The resolvent is never formed explicitly:
/// Q(z) = sum_j u_j u_j* / (lambda_j - z).
struct SpectralDecomposition {
  RVector lambdas;  // ascending, >= 0
  CMatrix vectors;  // unitary, column j pairs with lambdas(j)
  RVector omegas;   // ascending secular roots
  double c = 0.0;
  double sigma2 = 0.0;

  [[nodiscard]] int M() const { return static_cast<int>(lambdas.size()); }
  [[nodiscard]] double rho() const { return sigma2 * c; }
};

SpectralDecomposition decompose(const CMatrix& sigma_matrix, double sigma2);

inline SpectralDecomposition decompose(const model::Observation& observation, double sigma2) {
  return decompose(observation.sigma_matrix, sigma2);
}

struct StieltjesValue {
  Complex m;   // (1/M) sum 1 / (lambda_k - z)
  Complex dm;  // (1/M) sum 1 / (lambda_k - z)^2
};

/// Throws PoleHit when z is within 1e-14 (1 + lambda_max) of an eigenvalue.
StieltjesValue empirical_stieltjes(const SpectralDecomposition& spec, Complex z);

/// Eigenvalues of diag(lambdas) + (rho / M) 1 1^T, ascending.
///
/// Eigenvalues closer than 1e-12 (1 + lambda_max) are merged into one pole of
/// multiplicity p; p - 1 of the outputs are set to the merged eigenvalues
/// themselves and the remaining root is found in the next bracket.
/// rho == 0 returns the input unchanged.
RVector secular_roots(const RVector& lambdas, double rho);

/// b(z) = 1 + sigma2 c m_hat(z).
Complex b_hat(const SpectralDecomposition& spec, Complex z);

/// w(z) = z b(z)^2 - sigma2 (1 - c) b(z).
Complex w_hat(const SpectralDecomposition& spec, Complex z);

/// g(z) = w'(z) / b(z), evaluated as
///   b + 2 sigma2 c z m' - sigma2^2 c (1 - c) m' / b.
Complex g_hat(const SpectralDecomposition& spec, Complex z);

/// g_hat from an already computed Stieltjes value.
Complex g_hat(const SpectralDecomposition& spec, Complex z, const StieltjesValue& s);

}  // namespace gmusic::spectrum

#endif  // GMUSIC_SPECTRUM_HPP
