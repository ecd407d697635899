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

#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "gmusic/error.hpp"
#include "gmusic/model.hpp"
#include "gmusic/spectrum.hpp"

using namespace gmusic;
using namespace gmusic::spectrum;

namespace {

CMatrix random_matrix(int M, int N, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g;
  CMatrix X(M, N);
  for (Eigen::Index i = 0; i < X.size(); ++i) X(i) = Complex(g(gen), g(gen)) / std::sqrt(2.0 * N);
  return X;
}

// Dense eigenvalues of diag(lambdas) + (rho / M) 1 1^T.
RVector dense_rank_one(const RVector& lambdas, double rho) {
  const auto M = lambdas.size();
  RMatrix A = RMatrix::Constant(M, M, rho / M);
  A.diagonal() += lambdas;
  return Eigen::SelfAdjointEigenSolver<RMatrix>(A).eigenvalues();
}

}  // namespace

TEST_CASE("decompose") {
  SUBCASE("zero matrix") {
    const SpectralDecomposition s = decompose(CMatrix::Zero(3, 5), 1.0);
    CHECK(s.lambdas.cwiseAbs().maxCoeff() == 0.0);
    CHECK(s.c == doctest::Approx(0.6));
  }
  SUBCASE("row vector") {
    CMatrix v(1, 4);
    v << Complex(1, 2), Complex(0, -1), Complex(3, 0), Complex(0.5, 0.5);
    const SpectralDecomposition s = decompose(v, 1.0);
    CHECK(std::abs(s.lambdas(0) - v.squaredNorm()) < 1e-13);
  }
  SUBCASE("reconstruction") {
    const CMatrix X = random_matrix(8, 16, 1);
    const SpectralDecomposition s = decompose(X, 1.0);
    const CMatrix R = s.vectors * s.lambdas.asDiagonal() * s.vectors.adjoint();
    CHECK((X * X.adjoint() - R).norm() <= 1e-10 * (1.0 + s.lambdas(7)));
    CHECK((s.vectors.adjoint() * s.vectors - CMatrix::Identity(8, 8)).norm() < 1e-12);
    for (int k = 0; k + 1 < 8; ++k) CHECK(s.lambdas(k) <= s.lambdas(k + 1));
  }
  SUBCASE("rejects M >= N") { CHECK_THROWS_AS(decompose(CMatrix::Zero(4, 4), 1.0), Error); }
  SUBCASE("deterministic per seed") {
    model::ScenarioConfig cfg;
    cfg.M = 10;
    cfg.N = 20;
    cfg.angles = {0.1};
    cfg.powers = {2.0};
    const auto sc = model::build_scenario(cfg);
    const auto a = decompose(model::sample_observation(sc, 5), 1.0);
    const auto b = decompose(model::sample_observation(sc, 5), 1.0);
    CHECK(a.lambdas == b.lambdas);
    CHECK(a.vectors == b.vectors);
    CHECK(a.omegas == b.omegas);
  }
}

TEST_CASE("empirical_stieltjes") {
  SUBCASE("single atom") {
    const SpectralDecomposition s = decompose(CMatrix::Zero(2, 3), 1.0);
    const StieltjesValue v = empirical_stieltjes(s, kI);
    CHECK(std::abs(v.m - kI) < 1e-15);
    CHECK(std::abs(v.dm - Complex(-1.0, 0.0)) < 1e-15);
  }
  SUBCASE("mass recovery") {
    const SpectralDecomposition s = decompose(random_matrix(6, 12, 2), 1.0);
    const Complex z(0.0, 1e6);
    CHECK(std::abs(-z * empirical_stieltjes(s, z).m - 1.0) < 1e-5);
  }
  SUBCASE("extended precision oracle and bounds") {
    const SpectralDecomposition s = decompose(random_matrix(30, 50, 3), 1.0);
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> u(-1.0, 4.0);
    for (int i = 0; i < 100; ++i) {
      const Complex z(u(gen), 0.01 + std::abs(u(gen)));
      long double re = 0.0L;
      long double im = 0.0L;
      double dist = 1e300;
      for (int k = 0; k < s.M(); ++k) {
        const long double a = static_cast<long double>(s.lambdas(k)) - z.real();
        const long double b = -static_cast<long double>(z.imag());
        const long double den = a * a + b * b;
        re += a / den;
        im += -b / den;
        dist = std::min(dist, std::abs(s.lambdas(k) - z));
      }
      const Complex ref(static_cast<double>(re / s.M()), static_cast<double>(im / s.M()));
      const StieltjesValue v = empirical_stieltjes(s, z);
      CHECK(std::abs(v.m - ref) <= 1e-13 * std::abs(ref));
      CHECK(std::abs(v.m) <= 1.0 / dist * (1 + 1e-14));
      CHECK(std::abs(v.dm) <= 1.0 / (dist * dist) * (1 + 1e-14));
      CHECK(v.m.imag() > 0.0);
      CHECK(std::abs(1.0 / b_hat(s, z)) <= std::abs(z) / z.imag());
    }
  }
  SUBCASE("pole hit") {
    const SpectralDecomposition s = decompose(random_matrix(4, 8, 5), 1.0);
    try {
      empirical_stieltjes(s, s.lambdas(2));
      FAIL("expected PoleHit");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kPoleHit);
    }
  }
}

TEST_CASE("secular_roots") {
  SUBCASE("2x2 analytic") {
    RVector lam(2);
    lam << 1.0, 2.0;
    const RVector w = secular_roots(lam, 0.3);
    // Eigenvalues of [[1.15, 0.15], [0.15, 2.15]].
    CHECK(std::abs(w(0) - 1.1279846745544724) < 1e-14);
    CHECK(std::abs(w(1) - 2.1720153254455274) < 1e-14);
  }
  SUBCASE("all zero") {
    const RVector w = secular_roots(RVector::Zero(3), 0.3);
    CHECK(w(0) == 0.0);
    CHECK(w(1) == 0.0);
    CHECK(std::abs(w(2) - 0.3) < 1e-15);
  }
  SUBCASE("rho = 0 is the identity") {
    RVector lam(3);
    lam << 0.5, 1.0, 4.0;
    CHECK(secular_roots(lam, 0.0) == lam);
  }
  SUBCASE("repeated eigenvalue keeps p - 1 copies") {
    RVector lam(5);
    lam << 0.2, 1.0, 1.0, 1.0, 3.0;
    const RVector w = secular_roots(lam, 0.7);
    const RVector ref = dense_rank_one(lam, 0.7);
    CHECK(w(1) == 1.0);
    CHECK(w(2) == 1.0);
    CHECK((w - ref).cwiseAbs().maxCoeff() < 1e-13);
  }
  SUBCASE("dense oracle, interlacing, trace") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(0.0, 5.0);
    for (int trial = 0; trial < 300; ++trial) {
      const int M = 1 + static_cast<int>(gen() % 60);
      RVector lam(M);
      for (int k = 0; k < M; ++k) lam(k) = u(gen);
      if (trial % 5 == 0) lam.head(M / 2).setZero();
      std::sort(lam.begin(), lam.end());
      const double rho = 0.01 + u(gen);
      const RVector w = secular_roots(lam, rho);
      const RVector ref = dense_rank_one(lam, rho);
      CHECK((w - ref).cwiseAbs().maxCoeff() < 1e-11 * (1.0 + lam(M - 1) + rho));
      for (int k = 0; k < M; ++k) {
        CHECK(lam(k) <= w(k));
        if (k + 1 < M) CHECK(w(k) <= lam(k + 1));
      }
      CHECK(w(M - 1) <= lam(M - 1) + rho);
      CHECK(std::abs(w.sum() - lam.sum() - rho) <= 1e-12 * (1.0 + lam.sum()));
    }
  }
  SUBCASE("roots zero b_hat") {
    const SpectralDecomposition s = decompose(random_matrix(12, 20, 6), 0.8);
    for (int k = 0; k < s.M(); ++k) {
      // Relative to the size of the two terms of 1 + rho m.
      const Complex b = b_hat(s, s.omegas(k));
      const double scale = s.rho() * std::abs(empirical_stieltjes(s, s.omegas(k)).m);
      CHECK(std::abs(b) <= 1e-9 * scale);
    }
  }
  SUBCASE("sign of b_hat right of the top eigenvalue") {
    const SpectralDecomposition s = decompose(random_matrix(10, 25, 7), 1.0);
    const double top = s.lambdas(9);
    const double root = s.omegas(9);
    for (int i = 1; i < 20; ++i) {
      const double x1 = top + (root - top) * i / 20.0;
      CHECK(b_hat(s, x1).real() < 0.0);
      const double x2 = root + (root - top) * i;
      CHECK(b_hat(s, x2).real() > 0.0);
    }
  }
}

TEST_CASE("b_hat, w_hat, g_hat") {
  SUBCASE("noiseless degeneration") {
    const SpectralDecomposition s = decompose(random_matrix(5, 9, 8), 0.0);
    const Complex z(0.7, 0.3);
    CHECK(b_hat(s, z) == Complex(1.0, 0.0));
    CHECK(std::abs(w_hat(s, z) - z) < 1e-15);
    CHECK(std::abs(g_hat(s, z) - 1.0) < 1e-15);
  }
  SUBCASE("central difference oracle") {
    const SpectralDecomposition s = decompose(random_matrix(15, 30, 9), 1.3);
    const double h = 1e-6;
    for (int i = 0; i < 32; ++i) {
      const Complex z = Complex(1.0, 0.0) + 0.8 * std::polar(1.0, 2.0 * kPi * (i + 0.5) / 32.0);
      const Complex fd = (w_hat(s, z + h) - w_hat(s, z - h)) / (2.0 * h * b_hat(s, z));
      CHECK(std::abs(g_hat(s, z) - fd) <= 1e-6 * (1.0 + std::abs(fd)));
    }
  }
}
