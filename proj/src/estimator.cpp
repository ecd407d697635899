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

#include "gmusic/estimator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

#include <boost/math/quadrature/gauss.hpp>

#include "gmusic/error.hpp"
#include "gmusic/model.hpp"

namespace gmusic::estimator {

namespace {

constexpr int kPanelOrder = 16;

struct PanelRule {
  std::array<double, kPanelOrder> x;
  std::array<double, kPanelOrder> w;
};

// 16-point Gauss-Legendre rule on [-1, 1], nodes ascending.
PanelRule panel_rule() {
  using Rule = boost::math::quadrature::gauss<double, kPanelOrder>;
  const auto& a = Rule::abscissa();
  const auto& w = Rule::weights();
  PanelRule r{};
  constexpr int half = kPanelOrder / 2;
  for (int i = 0; i < half; ++i) {
    r.x[half - 1 - i] = -a[i];
    r.w[half - 1 - i] = w[i];
    r.x[half + i] = a[i];
    r.w[half + i] = w[i];
  }
  return r;
}

// Distance from a real point to the rectangle boundary.
double distance_to_boundary(const rmt::ContourSpec& cs, double x) {
  const double xl = cs.x_left();
  const double xr = cs.x_right();
  if (x > xl && x < xr) return std::min({x - xl, xr - x, cs.y});
  return std::min(std::abs(x - xl), std::abs(x - xr));
}

// (1 / 2 pi i) \oint_{dR^-} h(z) dz for a vector-valued h, by composite
// Gauss-Legendre panels on the four sides; the panel count doubles until
// two successive estimates agree to `tol`.
template <class Integrand>
CVector rectangle_integral(const rmt::ContourSpec& cs, Eigen::Index n, Integrand&& h,
                           const WeightOptions& opt) {
  static const PanelRule rule = panel_rule();
  const double xl = cs.x_left();
  const double xr = cs.x_right();
  // Counterclockwise corners.
  const std::array<Complex, 5> corner = {Complex(xl, -cs.y), Complex(xr, -cs.y), Complex(xr, cs.y),
                                         Complex(xl, cs.y), Complex(xl, -cs.y)};
  CVector value(n);
  CVector previous;
  for (int panels = 2;; panels *= 2) {
    if (panels * kPanelOrder > opt.max_nodes_per_side) {
      throw Error(ErrorCode::kQuadratureNoConvergence,
                  "rectangle quadrature did not reach " + std::to_string(opt.quadrature_tol));
    }
    CVector acc = CVector::Zero(n);
    for (int side = 0; side < 4; ++side) {
      const Complex z0 = corner[side];
      const Complex dz = corner[side + 1] - z0;
      for (int p = 0; p < panels; ++p) {
        const double center = (p + 0.5) / panels;
        const double half = 0.5 / panels;
        for (int q = 0; q < kPanelOrder; ++q) {
          const Complex z = z0 + (center + half * rule.x[q]) * dz;
          h(z, value);
          acc += (half * rule.w[q]) * dz * value;
        }
      }
    }
    // Clockwise orientation.
    CVector result = -acc / (2.0 * kPi * kI);
    if (previous.size() == n && (result - previous).cwiseAbs().maxCoeff() < opt.quadrature_tol) {
      return result;
    }
    previous = std::move(result);
  }
}

WeightVector split(const CVector& v) { return {v.real(), v.imag()}; }

std::vector<double> distinct_sorted(std::vector<double> v, double tol) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double x : v) {
    if (out.empty() || x - out.back() > tol) out.push_back(x);
  }
  return out;
}

WeightVector residue_weights(const spectrum::SpectralDecomposition& spec,
                             const rmt::ContourSpec& cs, const WeightOptions& opt) {
  const int M = spec.M();
  const double tol = 1e-12 * (1.0 + spec.lambdas(M - 1));
  std::vector<double> all(spec.lambdas.begin(), spec.lambdas.end());
  all.insert(all.end(), spec.omegas.begin(), spec.omegas.end());
  const std::vector<double> poles = distinct_sorted(all, tol);

  CVector acc = CVector::Zero(M);
  const int n = opt.residue_nodes;
  for (std::size_t i = 0; i < poles.size(); ++i) {
    const double p = poles[i];
    if (!cs.encloses(p)) continue;
    double gap = 3.0 * cs.epsilon;
    if (i > 0) gap = std::min(gap, p - poles[i - 1]);
    if (i + 1 < poles.size()) gap = std::min(gap, poles[i + 1] - p);
    const double r = 0.25 * gap;
    // Res = (1 / 2 pi i) \oint f dz = (1/n) sum f(z_q) r e^{i phi_q}.
    for (int q = 0; q < n; ++q) {
      const Complex e = std::polar(1.0, 2.0 * kPi * q / n);
      const Complex z = p + r * e;
      const Complex g = spectrum::g_hat(spec, z);
      const Complex scale = g * r * e / static_cast<double>(n);
      for (int j = 0; j < M; ++j) acc(j) += scale / (spec.lambdas(j) - z);
    }
  }
  // Clockwise orientation flips the sign of the residue sum.
  return split(-acc);
}

void check_margin(const spectrum::SpectralDecomposition& spec, const rmt::ContourSpec& cs) {
  const double margin = 3.0 * cs.epsilon;
  for (int k = 0; k < spec.M(); ++k) {
    for (double x : {spec.lambdas(k), spec.omegas(k)}) {
      if (distance_to_boundary(cs, x) <= margin) {
        throw Error(ErrorCode::kPoleTooClose,
                    "pole " + std::to_string(x) + " lies within 3 eps of the contour");
      }
    }
  }
}

}  // namespace

double classical_eta(const spectrum::SpectralDecomposition& spec, int K, double theta) {
  if (K < 0 || K >= spec.M()) throw Error(ErrorCode::kInvalidArgument, "need 0 <= K < M");
  const CVector a = model::steering(theta, spec.M());
  return (spec.vectors.leftCols(spec.M() - K).adjoint() * a).squaredNorm();
}

WeightVector classical_weights(const spectrum::SpectralDecomposition& spec, int K) {
  if (K < 0 || K >= spec.M()) throw Error(ErrorCode::kInvalidArgument, "need 0 <= K < M");
  WeightVector w{RVector::Zero(spec.M()), RVector::Zero(spec.M())};
  w.rho.head(spec.M() - K).setOnes();
  return w;
}

WeightVector improved_weights(const spectrum::SpectralDecomposition& spec,
                              const rmt::ContourSpec& contour, WeightMethod method,
                              const WeightOptions& options) {
  if (!(contour.epsilon > 0.0) || !(contour.y > 0.0) || !(contour.x_left() < contour.x_right())) {
    throw Error(ErrorCode::kInvalidArgument, "degenerate contour");
  }
  if (options.check_pole_margin) check_margin(spec, contour);
  if (method == WeightMethod::kResidue) return residue_weights(spec, contour, options);

  const int M = spec.M();
  return split(rectangle_integral(
      contour, M,
      [&](Complex z, CVector& out) {
        const Complex g = spectrum::g_hat(spec, z);
        for (int j = 0; j < M; ++j) out(j) = g / (spec.lambdas(j) - z);
      },
      options));
}

RVector deterministic_weights(const rmt::DeterministicInput& input,
                              const rmt::ContourSpec& contour, const WeightOptions& options) {
  const int M = input.M();
  const double s = input.sigma2;
  const double c = input.c;
  const CVector v = rectangle_integral(
      contour, M,
      [&](Complex z, CVector& out) {
        const Complex m = rmt::solve_canonical(input, z);
        const Complex dm = rmt::canonical_derivative(input, z, m);
        const Complex b = 1.0 + s * c * m;
        const Complex db = s * c * dm;
        const Complex w = z * b * b - s * (1.0 - c) * b;
        const Complex dw = b * b + 2.0 * z * b * db - s * (1.0 - c) * db;
        for (int k = 0; k < M; ++k) out(k) = dw / (input.true_lambdas(k) - w);
      },
      options);
  return v.real();
}

double improved_eta(const WeightVector& weights, const spectrum::SpectralDecomposition& spec,
                    double theta) {
  const CVector a = model::steering(theta, spec.M());
  const CVector p = spec.vectors.adjoint() * a;
  double sum = 0.0;
  for (int j = 0; j < spec.M(); ++j) sum += weights.rho(j) * std::norm(p(j));
  return sum;
}

QuadraticForm::QuadraticForm(const spectrum::SpectralDecomposition& spec, const RVector& rho) {
  const int M = spec.M();
  const CMatrix P = spec.vectors * rho.asDiagonal() * spec.vectors.adjoint();
  diag_sums_ = CVector::Zero(M);
  for (int d = 0; d < M; ++d) {
    Complex s{0.0, 0.0};
    for (int n = 0; n + d < M; ++n) s += P(n + d, n);
    diag_sums_(d) = s;
  }
}

double QuadraticForm::operator()(double theta) const {
  const int M = this->M();
  if (M == 0) return 0.0;
  // Horner in x = e^{-i theta} for sum_{d >= 1} s_d x^d.
  const Complex x = std::polar(1.0, -theta);
  Complex acc{0.0, 0.0};
  for (int d = M - 1; d >= 1; --d) acc = (acc + diag_sums_(d)) * x;
  return (diag_sums_(0).real() + 2.0 * acc.real()) / M;
}

RVector uniform_grid(int G) {
  if (G < 1) throw Error(ErrorCode::kInvalidArgument, "grid size must be positive");
  RVector g(G);
  for (int k = 0; k < G; ++k) g(k) = -kPi + 2.0 * kPi * k / G;
  return g;
}

int default_grid_size(const spectrum::SpectralDecomposition& spec, int cap) {
  const long N = std::lround(spec.M() / spec.c);
  return static_cast<int>(std::min<long>(N * N, cap));
}

PseudoSpectrum pseudo_spectrum(const spectrum::SpectralDecomposition& spec, int K,
                               const WeightVector& weights, const RVector& grid) {
  const QuadraticForm classical(spec, classical_weights(spec, K).rho);
  const QuadraticForm improved(spec, weights.rho);
  PseudoSpectrum ps;
  ps.M = spec.M();
  ps.grid = grid;
  ps.values_classical.resize(grid.size());
  ps.values_improved.resize(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    if (i > 0 && !(grid(i) > grid(i - 1))) {
      throw Error(ErrorCode::kInvalidArgument, "grid must be strictly increasing");
    }
    ps.values_classical(i) = classical(grid(i));
    ps.values_improved(i) = improved(grid(i));
  }
  return ps;
}

double golden_section(const Evaluator& f, double lo, double hi, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

DoAEstimates extract_doas_intervals(const Evaluator& f, const std::vector<AngleInterval>& intervals,
                                    double tol) {
  constexpr int kSteps = 512;
  DoAEstimates out;
  const Evaluator abs_f = [&](double t) { return std::abs(f(t)); };
  for (const auto& I : intervals) {
    if (!(I.hi > I.lo)) {
      throw Error(ErrorCode::kEmptyInterval,
                  "interval [" + std::to_string(I.lo) + ", " + std::to_string(I.hi) + "]");
    }
    const double step = (I.hi - I.lo) / kSteps;
    auto node = [&](int i) { return i == kSteps ? I.hi : I.lo + step * i; };
    int best = 0;
    double best_val = abs_f(node(0));
    for (int i = 1; i <= kSteps; ++i) {
      const double v = abs_f(node(i));
      if (v < best_val) {
        best_val = v;
        best = i;
      }
    }
    double theta = node(best);
    const double refined = golden_section(abs_f, node(std::max(best - 1, 0)),
                                          node(std::min(best + 1, kSteps)), tol);
    const double refined_val = abs_f(refined);
    if (refined_val < best_val) {
      theta = refined;
      best_val = refined_val;
    }
    out.intervals.push_back(I);
    out.estimates.push_back(theta);
    out.residuals.push_back(best_val);
  }
  return out;
}

DoAEstimates extract_doas_topk(const PseudoSpectrum& pspec, int K, const Evaluator& f, double tol) {
  const auto G = pspec.grid.size();
  if (K < 1) throw Error(ErrorCode::kInvalidArgument, "K must be positive");
  if (G < 2 * K + 1) throw Error(ErrorCode::kInvalidArgument, "grid too small for K minima");
  const RVector& v = pspec.values_improved;
  std::vector<Eigen::Index> minima;
  for (Eigen::Index i = 1; i + 1 < G; ++i) {
    if (v(i) < v(i - 1) && v(i) < v(i + 1)) minima.push_back(i);
  }
  std::stable_sort(minima.begin(), minima.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return v(a) < v(b); });
  const double spacing = 2.0 * kPi / pspec.M;
  std::vector<Eigen::Index> picked;
  for (Eigen::Index i : minima) {
    if (static_cast<int>(picked.size()) == K) break;
    const bool clear = std::all_of(picked.begin(), picked.end(), [&](Eigen::Index j) {
      return std::abs(pspec.grid(i) - pspec.grid(j)) >= spacing;
    });
    if (clear) picked.push_back(i);
  }
  if (static_cast<int>(picked.size()) < K) {
    throw Error(ErrorCode::kTooFewMinima, "found " + std::to_string(picked.size()) +
                                              " separated local minima, need " + std::to_string(K));
  }
  std::sort(picked.begin(), picked.end());
  DoAEstimates out;
  for (Eigen::Index i : picked) {
    const AngleInterval cell{pspec.grid(i - 1), pspec.grid(i + 1)};
    double theta = golden_section(f, cell.lo, cell.hi, tol);
    if (!(f(theta) <= f(pspec.grid(i)))) theta = pspec.grid(i);
    out.intervals.push_back(cell);
    out.estimates.push_back(theta);
    out.residuals.push_back(std::abs(f(theta)));
  }
  return out;
}

}  // namespace gmusic::estimator
