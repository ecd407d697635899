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

#include "gmusic/error.hpp"

namespace gmusic {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kDegenerateSteering: return "DegenerateSteering";
    case ErrorCode::kNumericalFailure: return "NumericalFailure";
    case ErrorCode::kPoleHit: return "PoleHit";
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kSupportSearchFailed: return "SupportSearchFailed";
    case ErrorCode::kSeparationViolated: return "SeparationViolated";
    case ErrorCode::kPoleTooClose: return "PoleTooClose";
    case ErrorCode::kQuadratureNoConvergence: return "QuadratureNoConvergence";
    case ErrorCode::kEmptyInterval: return "EmptyInterval";
    case ErrorCode::kTooFewMinima: return "TooFewMinima";
  }
  return "Unknown";
}

}  // namespace gmusic
