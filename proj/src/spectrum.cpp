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

#include "gmusic/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "gmusic/error.hpp"

namespace gmusic::spectrum {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kMaxSecularIterations = 200;

// Distinct poles of the secular function with their multiplicities.
struct PoleSet {
  std::vector<double> location;
  std::vector<double> weight;
};

// f(tau) = 1 + (rho / M) sum_j p_j / (delta_j - tau), with delta_j measured
// from the origin pole so that tau keeps full relative precision near it.
struct SecularFunction {
  const PoleSet& poles;
  double origin;
  double scale;  // rho / M

  void eval(double tau, double& f, double& df) const {
    double s = 0.0;
    double ds = 0.0;
    for (std::size_t j = 0; j < poles.location.size(); ++j) {
      const double d = (poles.location[j] - origin) - tau;
      const double inv = 1.0 / d;
      s += poles.weight[j] * inv;
      ds += poles.weight[j] * inv * inv;
    }
    f = 1.0 + scale * s;
    df = scale * ds;
  }
};

// Root of the increasing function f on the open bracket (lo, hi) where
// f(lo+) < 0 < f(hi-). The pole at the origin sits at tau = 0, which is one
// of the two bracket ends.
double solve_bracket(const SecularFunction& fn, double lo, double hi) {
  double tau = 0.5 * (lo + hi);
  for (int it = 0; it < kMaxSecularIterations; ++it) {
    double f = 0.0;
    double df = 0.0;
    fn.eval(tau, f, df);
    if (f == 0.0) return tau;
    if (f < 0.0) {
      lo = tau;
    } else {
      hi = tau;
    }
    if (hi - lo <= 4.0 * kEps * std::max(std::abs(lo), std::abs(hi))) break;

    // Osculating model C + D / (-tau) matched to f and f' at tau; it carries
    // the singular behaviour of the origin pole exactly.
    double next = std::numeric_limits<double>::quiet_NaN();
    const double C = f + df * tau;
    if (C != 0.0) next = df * tau * tau / C;
    if (!(next > lo && next < hi)) next = tau - f / df;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const bool done = std::abs(next - tau) <= 2.0 * kEps * std::abs(next);
    tau = next;
    if (done) break;
  }
  return tau;
}

}  // namespace

SpectralDecomposition decompose(const CMatrix& sigma_matrix, double sigma2) {
  const auto M = sigma_matrix.rows();
  const auto N = sigma_matrix.cols();
  if (M < 1 || M >= N) throw Error(ErrorCode::kInvalidArgument, "decompose needs 1 <= M < N");
  if (!(sigma2 >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "sigma2 must be non-negative");

  Eigen::BDCSVD<CMatrix> svd(sigma_matrix, Eigen::ComputeThinU);
  if (svd.info() != Eigen::Success) {
    throw Error(ErrorCode::kNumericalFailure, "singular value decomposition did not converge");
  }
  const RVector& s = svd.singularValues();
  const CMatrix& U = svd.matrixU();

  SpectralDecomposition spec;
  spec.c = static_cast<double>(M) / static_cast<double>(N);
  spec.sigma2 = sigma2;
  spec.lambdas.resize(M);
  spec.vectors.resize(M, M);
  // Singular values come out descending.
  for (Eigen::Index k = 0; k < M; ++k) {
    spec.lambdas(k) = s(M - 1 - k) * s(M - 1 - k);
    spec.vectors.col(k) = U.col(M - 1 - k);
  }
  spec.omegas = secular_roots(spec.lambdas, spec.rho());
  return spec;
}

StieltjesValue empirical_stieltjes(const SpectralDecomposition& spec, Complex z) {
  const Eigen::Index M = spec.lambdas.size();
  const double guard = 1e-14 * (1.0 + spec.lambdas(M - 1));
  Complex m{0.0, 0.0};
  Complex dm{0.0, 0.0};
  for (Eigen::Index k = 0; k < M; ++k) {
    const Complex d = spec.lambdas(k) - z;
    if (std::abs(d) < guard) {
      throw Error(ErrorCode::kPoleHit, "z coincides with an eigenvalue of Sigma Sigma*");
    }
    const Complex inv = 1.0 / d;
    m += inv;
    dm += inv * inv;
  }
  const double scale = 1.0 / static_cast<double>(M);
  return {m * scale, dm * scale};
}

RVector secular_roots(const RVector& lambdas_in, double rho) {
  if (!(rho >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "secular_roots needs rho >= 0");
  const Eigen::Index M = lambdas_in.size();
  RVector lambdas = lambdas_in;
  std::sort(lambdas.begin(), lambdas.end());
  if (rho == 0.0 || M == 0) return lambdas;

  const double tol = 1e-12 * (1.0 + std::abs(lambdas(M - 1)));
  PoleSet poles;
  std::vector<Eigen::Index> last_member;  // index of the top member of each pole
  RVector omegas(M);
  for (Eigen::Index k = 0; k < M; ++k) {
    if (k > 0 && lambdas(k) - lambdas(k - 1) <= tol) {
      // Merge into the current pole; the previous member becomes a fixed root.
      omegas(k - 1) = lambdas(k - 1);
      poles.location.back() = lambdas(k);
      poles.weight.back() += 1.0;
      last_member.back() = k;
    } else {
      poles.location.push_back(lambdas(k));
      poles.weight.push_back(1.0);
      last_member.push_back(k);
    }
  }

  const double scale = rho / static_cast<double>(M);
  const std::size_t D = poles.location.size();
  for (std::size_t j = 0; j < D; ++j) {
    const double left = poles.location[j];
    double root = 0.0;
    if (j + 1 < D) {
      const double right = poles.location[j + 1];
      const double gap = right - left;
      SecularFunction from_left{poles, left, scale};
      double f = 0.0;
      double df = 0.0;
      from_left.eval(0.5 * gap, f, df);
      if (f == 0.0) {
        root = left + 0.5 * gap;
      } else if (f > 0.0) {
        root = left + solve_bracket(from_left, 0.0, 0.5 * gap);
      } else {
        SecularFunction from_right{poles, right, scale};
        root = right + solve_bracket(from_right, -0.5 * gap, 0.0);
      }
      root = std::clamp(root, left, right);
    } else {
      // f(left + rho) >= 0 because every |delta_j - rho| >= rho.
      SecularFunction from_left{poles, left, scale};
      root = left + solve_bracket(from_left, 0.0, rho);
      root = std::max(root, left);
    }
    omegas(last_member[j]) = root;
  }
  return omegas;
}

Complex b_hat(const SpectralDecomposition& spec, Complex z) {
  return 1.0 + spec.rho() * empirical_stieltjes(spec, z).m;
}

Complex w_hat(const SpectralDecomposition& spec, Complex z) {
  const Complex b = b_hat(spec, z);
  return z * b * b - spec.sigma2 * (1.0 - spec.c) * b;
}

Complex g_hat(const SpectralDecomposition& spec, Complex z, const StieltjesValue& s) {
  const double rho = spec.rho();
  const Complex b = 1.0 + rho * s.m;
  Complex g = b + 2.0 * rho * z * s.dm;
  if (spec.sigma2 != 0.0) g -= spec.sigma2 * rho * (1.0 - spec.c) * s.dm / b;
  return g;
}

Complex g_hat(const SpectralDecomposition& spec, Complex z) {
  return g_hat(spec, z, empirical_stieltjes(spec, z));
}

}  // namespace gmusic::spectrum
