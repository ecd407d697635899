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

#ifndef GMUSIC_RANDOM_HPP
#define GMUSIC_RANDOM_HPP

#include <cstdint>
#include <random>
#include <utility>

namespace gmusic {

/// SplitMix64 finalizer. Used to decorrelate user seeds before they reach
/// the engine and to derive per-trial seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Per-trial seed: splitmix64(splitmix64(base + N) ^ trial).
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t n,
                                    std::uint64_t trial) noexcept {
  return splitmix64(splitmix64(base + n) ^ trial);
}

/// Reproducible uniform / Gaussian stream.
///
/// The engine is std::mt19937_64 seeded with splitmix64(seed); its output
/// sequence is fixed by the C++ standard. Uniforms take the top 53 bits of
/// one engine draw. Gaussians come in pairs from the Box-Muller transform
/// of two consecutive uniforms (u1 in (0,1], u2 in [0,1)):
///   r = sqrt(-2 ln u1),  (r cos 2 pi u2, r sin 2 pi u2).
/// std::normal_distribution is avoided because its algorithm is
/// implementation defined.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Two independent standard normals.
  std::pair<double, double> normal_pair();

 private:
  std::mt19937_64 engine_;
};

}  // namespace gmusic

#endif  // GMUSIC_RANDOM_HPP
