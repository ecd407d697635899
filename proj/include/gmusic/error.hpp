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

#ifndef GMUSIC_ERROR_HPP
#define GMUSIC_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace gmusic {

/// Failure categories raised by the library. The CLI maps each one to a
/// distinct process exit code (see cli.hpp).
enum class ErrorCode {
  kInvalidArgument,
  kParseError,
  kIoError,
  kDegenerateSteering,
  kNumericalFailure,
  kPoleHit,
  kNoConvergence,
  kSupportSearchFailed,
  kSeparationViolated,
  kPoleTooClose,
  kQuadratureNoConvergence,
  kEmptyInterval,
  kTooFewMinima,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gmusic

#endif  // GMUSIC_ERROR_HPP
