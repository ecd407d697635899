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

#include "gmusic/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "gmusic/error.hpp"
#include "gmusic/random.hpp"

namespace gmusic::model {

namespace {

// Inverse of A*A after checking its conditioning.
CMatrix checked_gram_inverse(const CMatrix& steering) {
  const CMatrix gram = steering.adjoint() * steering;
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(gram);
  const RVector& ev = eig.eigenvalues();
  if (ev.size() == 0) return CMatrix(0, 0);
  if (!(ev(0) > 0.0) || ev(ev.size() - 1) / ev(0) > kMaxGramCondition) {
    throw Error(ErrorCode::kDegenerateSteering,
                "condition number of A*A exceeds 1e12 (angles too close)");
  }
  return eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().adjoint();
}

// Orthonormal N x K basis from the QR factorization of a Gaussian matrix.
CMatrix random_orthonormal_columns(int N, int K, NormalStream& stream) {
  CMatrix g(N, K);
  for (int k = 0; k < K; ++k) {
    for (int n = 0; n < N; ++n) {
      const auto [re, im] = stream.normal_pair();
      g(n, k) = Complex(re, im);
    }
  }
  Eigen::HouseholderQR<CMatrix> qr(g);
  return qr.householderQ() * CMatrix::Identity(N, K);
}

}  // namespace

CVector steering(double theta, int M) {
  CVector a(M);
  const double scale = 1.0 / std::sqrt(static_cast<double>(M));
  for (int m = 0; m < M; ++m) a(m) = std::polar(scale, m * theta);
  return a;
}

CMatrix steering_matrix(std::span<const double> angles, int M) {
  CMatrix A(M, static_cast<Eigen::Index>(angles.size()));
  for (std::size_t k = 0; k < angles.size(); ++k) A.col(static_cast<Eigen::Index>(k)) = steering(angles[k], M);
  return A;
}

Scenario build_scenario(const ScenarioConfig& config) {
  const int M = config.M;
  const int N = config.N;
  const int K = static_cast<int>(config.angles.size());
  if (M < 1 || N < 1) throw Error(ErrorCode::kInvalidArgument, "M and N must be positive");
  if (M >= N) throw Error(ErrorCode::kInvalidArgument, "need M < N (c_N < 1)");
  if (K >= M) throw Error(ErrorCode::kInvalidArgument, "need K < M");
  if (config.powers.size() != config.angles.size()) {
    throw Error(ErrorCode::kInvalidArgument, "one power per angle required");
  }
  if (!(config.sigma2 >= 0.0) || !std::isfinite(config.sigma2)) {
    throw Error(ErrorCode::kInvalidArgument, "sigma2 must be finite and non-negative");
  }

  // Sort sources by angle, carrying powers along.
  std::vector<int> order(K);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return config.angles[a] < config.angles[b]; });
  std::vector<double> angles(K);
  std::vector<double> powers(K);
  for (int k = 0; k < K; ++k) {
    angles[k] = config.angles[order[k]];
    powers[k] = config.powers[order[k]];
    if (!std::isfinite(angles[k]) || angles[k] <= -kPi || angles[k] > kPi) {
      throw Error(ErrorCode::kInvalidArgument, "angles must lie in (-pi, pi]");
    }
    if (!(powers[k] > 0.0) || !std::isfinite(powers[k])) {
      throw Error(ErrorCode::kInvalidArgument, "source powers must be positive");
    }
    if (k > 0 && angles[k] == angles[k - 1]) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate angle " + std::to_string(angles[k]));
    }
  }

  Scenario sc;
  sc.M = M;
  sc.N = N;
  sc.K = K;
  sc.angles = angles;
  sc.sigma2 = config.sigma2;
  sc.steering_matrix = steering_matrix(angles, M);
  sc.source_matrix = CMatrix::Zero(K, N);

  if (K > 0) {
    const CMatrix gram_inv = checked_gram_inverse(sc.steering_matrix);
    NormalStream stream(config.source_seed);
    if (config.source_model == SourceModel::kRandomPhase) {
      for (int n = 0; n < N; ++n) {
        for (int k = 0; k < K; ++k) {
          sc.source_matrix(k, n) = std::polar(std::sqrt(powers[k]), 2.0 * kPi * stream.uniform());
        }
      }
    } else {
      // S = sqrt(N) (A*A)^{-1/2} diag(sqrt p) V*, so that
      // B B* = U diag(p) U* with U = A (A*A)^{-1/2} orthonormal.
      Eigen::SelfAdjointEigenSolver<CMatrix> eig(gram_inv);
      const CMatrix gram_inv_sqrt = eig.eigenvectors() *
                                    eig.eigenvalues().cwiseSqrt().asDiagonal() *
                                    eig.eigenvectors().adjoint();
      const CMatrix V = random_orthonormal_columns(N, K, stream);
      RVector amp(K);
      for (int k = 0; k < K; ++k) amp(k) = std::sqrt(powers[k]);
      sc.source_matrix = std::sqrt(static_cast<double>(N)) * gram_inv_sqrt * amp.asDiagonal() * V.adjoint();
    }
  }
  sc.B = sc.steering_matrix * sc.source_matrix / std::sqrt(static_cast<double>(N));

  if (K > 0) {
    Eigen::JacobiSVD<CMatrix> svd(sc.B);
    const RVector& s = svd.singularValues();
    if (s(0) > config.norm_bound) {
      throw Error(ErrorCode::kInvalidArgument, "spectral norm of B exceeds the configured bound");
    }
    const double cutoff = std::sqrt(1e-10) * s(0);  // sigma^2 > 1e-10 lambda_max
    const auto rank = (s.array() > cutoff).count();
    if (rank != K) {
      throw Error(ErrorCode::kNumericalFailure, "B B* does not have rank K");
    }
  }
  return sc;
}

Observation sample_observation(const Scenario& scenario, std::uint64_t seed) {
  const int M = scenario.M;
  const int N = scenario.N;
  const double scale = std::sqrt(scenario.sigma2 / (2.0 * N));
  NormalStream stream(seed);
  Observation obs;
  obs.seed = seed;
  obs.sigma_matrix = scenario.B;
  if (scenario.sigma2 == 0.0) return obs;
  for (int n = 0; n < N; ++n) {
    for (int m = 0; m < M; ++m) {
      const auto [re, im] = stream.normal_pair();
      obs.sigma_matrix(m, n) += scale * Complex(re, im);
    }
  }
  return obs;
}

GroundTruth::GroundTruth(const Scenario& scenario)
    : M_(scenario.M), steering_(scenario.steering_matrix) {
  projector_ = CMatrix::Identity(M_, M_);
  if (scenario.K == 0) {
    gram_inverse_ = CMatrix(0, 0);
    return;
  }
  gram_inverse_ = checked_gram_inverse(steering_);
  projector_ -= steering_ * gram_inverse_ * steering_.adjoint();
  projector_ = 0.5 * (projector_ + projector_.adjoint()).eval();
}

double GroundTruth::eta(double theta) const {
  if (steering_.cols() == 0) return 1.0;
  const CVector a = steering(theta, M_);
  const CVector p = steering_.adjoint() * a;
  const double signal = (p.adjoint() * gram_inverse_ * p)(0).real();
  return std::clamp(1.0 - signal, 0.0, 1.0);
}

double true_eta(const Scenario& scenario, double theta) {
  return GroundTruth(scenario).eta(theta);
}

GroundTruth true_projector(const Scenario& scenario) { return GroundTruth(scenario); }

Complex exp_sum_q(double alpha, int M) {
  Complex sum{0.0, 0.0};
  for (int k = 1; k <= M; ++k) sum += std::polar(1.0, -2.0 * kPi * k * alpha);
  return sum / static_cast<double>(M);
}

RVector signal_eigenvalues(const Scenario& scenario) {
  const int M = scenario.M;
  RVector lambdas = RVector::Zero(M);
  if (scenario.K == 0) return lambdas;
  Eigen::JacobiSVD<CMatrix> svd(scenario.B);
  const RVector s = svd.singularValues();
  for (Eigen::Index k = 0; k < s.size(); ++k) lambdas(k) = s(k) * s(k);
  std::sort(lambdas.begin(), lambdas.end());
  const double cutoff = 1e-12 * (1.0 + lambdas(M - 1));
  for (int k = 0; k < M; ++k) {
    if (lambdas(k) <= cutoff) lambdas(k) = 0.0;
  }
  return lambdas;
}

}  // namespace gmusic::model
