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

#ifndef GMUSIC_CLI_HPP
#define GMUSIC_CLI_HPP

#include <iosfwd>
#include <string>

#include "gmusic/error.hpp"
#include "gmusic/types.hpp"

// Command-line front end. Exit codes:
//   0 success              7 NoConvergence
//   1 InvalidArgument      8 NumericalFailure
//   2 ParseError           9 DegenerateSteering
//   3 SupportSearchFailed 10 PoleHit
//   4 SeparationViolated  11 EmptyInterval
//   5 PoleTooClose        12 TooFewMinima
//   6 QuadratureNoConv.   13 IoError
namespace gmusic::cli {

int exit_code(ErrorCode code) noexcept;

/// One value per line; blank lines and lines starting with '#' are skipped.
RVector read_eigenvalues(std::istream& in, const std::string& name);
RVector read_eigenvalue_file(const std::string& path);

/// Header `# complex M N`, then M lines of N comma-separated entries
/// `<re>(+|-)<im>i`.
CMatrix read_complex_matrix(std::istream& in, const std::string& name);
CMatrix read_complex_matrix_file(const std::string& path);
void write_complex_matrix(std::ostream& out, const CMatrix& matrix);

/// Runs one command line. Diagnostics go to `err`; primary output goes to
/// `out` unless --out names a file.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gmusic::cli

#endif  // GMUSIC_CLI_HPP
