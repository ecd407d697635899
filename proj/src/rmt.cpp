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

#include "gmusic/rmt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gmusic/error.hpp"

namespace gmusic::rmt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Eigenvalues of B B* grouped by value.
struct Atoms {
  std::vector<double> value;
  std::vector<double> count;
  double M = 0.0;
};

Atoms atoms_of(const DeterministicInput& input) {
  Atoms a;
  a.M = static_cast<double>(input.M());
  for (Eigen::Index k = 0; k < input.true_lambdas.size(); ++k) {
    const double v = input.true_lambdas(k);
    if (!a.value.empty() && a.value.back() == v) {
      a.count.back() += 1.0;
    } else {
      a.value.push_back(v);
      a.count.push_back(1.0);
    }
  }
  return a;
}

// G(m) = m - F(m) and its derivative in m.
struct CanonicalMap {
  const Atoms& atoms;
  double sigma2;
  double c;

  Complex apply(Complex z, Complex m) const {
    const Complex b = 1.0 + sigma2 * c * m;
    Complex F{0.0, 0.0};
    for (std::size_t j = 0; j < atoms.value.size(); ++j) {
      F += atoms.count[j] / (-z * b + sigma2 * (1.0 - c) + atoms.value[j] / b);
    }
    return F / atoms.M;
  }

  void residual(Complex z, Complex m, Complex& G, Complex& dG) const {
    const Complex b = 1.0 + sigma2 * c * m;
    Complex F{0.0, 0.0};
    Complex dF{0.0, 0.0};
    for (std::size_t j = 0; j < atoms.value.size(); ++j) {
      const Complex d = -z * b + sigma2 * (1.0 - c) + atoms.value[j] / b;
      const Complex dd = sigma2 * c * (-z - atoms.value[j] / (b * b));
      const Complex inv = 1.0 / d;
      F += atoms.count[j] * inv;
      dF -= atoms.count[j] * dd * inv * inv;
    }
    G = m - F / atoms.M;
    dG = 1.0 - dF / atoms.M;
  }
};

bool finite(Complex v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }

// Stieltjes-class check for Im z > 0: Im m > 0 and Re(1 + sigma2 c m) >= 1/2.
bool admissible(const CanonicalMap& map, Complex m) {
  if (!finite(m) || m.imag() <= 0.0) return false;
  const double re_b = 1.0 + map.sigma2 * map.c * m.real();
  return re_b >= 0.5 - 1e-9;
}

bool newton(const CanonicalMap& map, Complex z, Complex& m) {
  Complex x = m;
  for (int it = 0; it < 60; ++it) {
    Complex G;
    Complex dG;
    map.residual(z, x, G, dG);
    if (!finite(G) || !finite(dG) || dG == Complex{0.0, 0.0}) return false;
    const Complex step = G / dG;
    x -= step;
    if (!finite(x)) return false;
    if (std::abs(step) <= 1e-15 * std::abs(x)) {
      m = x;
      return true;
    }
  }
  // Accept a stalled iterate if its residual is tiny.
  Complex G;
  Complex dG;
  map.residual(z, x, G, dG);
  if (finite(G) && std::abs(G) <= 1e-13 * std::abs(x)) {
    m = x;
    return true;
  }
  return false;
}

// m <- (1 - zeta) m + zeta F(m), zeta = 1/2.
bool damped_fixed_point(const CanonicalMap& map, Complex z, Complex& m) {
  Complex x = m;
  for (int it = 0; it < 10000; ++it) {
    const Complex next = 0.5 * x + 0.5 * map.apply(z, x);
    if (!finite(next)) return false;
    const double step = std::abs(next - x);
    x = next;
    if (step <= 1e-13 * std::max(1e-300, std::abs(x))) {
      m = x;
      return true;
    }
  }
  return false;
}

// Solve at height h from a warm start; Newton first, damped iteration as
// the fallback.
bool solve_level(const CanonicalMap& map, Complex z, Complex& m) {
  Complex trial = m;
  if (newton(map, z, trial) && admissible(map, trial)) {
    m = trial;
    return true;
  }
  trial = m;
  if (damped_fixed_point(map, z, trial)) {
    newton(map, z, trial);
    if (admissible(map, trial)) {
      m = trial;
      return true;
    }
  }
  return false;
}

double start_height(const Atoms& atoms, double sigma2, double c, Complex z) {
  const double top = atoms.value.empty() ? 0.0 : atoms.value.back();
  const double scale = top + sigma2 * (1.0 + std::sqrt(c)) * (1.0 + std::sqrt(c));
  return std::max({1.0, 2.0 * std::abs(z), 2.0 * scale});
}

// Continuation from x + i h0 down to x + i h for every h in `heights`
// (descending). Returns m at each requested height.
std::vector<Complex> continuation(const Atoms& atoms, double sigma2, double c, double x,
                                  const std::vector<double>& heights) {
  const CanonicalMap map{atoms, sigma2, c};
  const double h_target_top = heights.front();
  double h = start_height(atoms, sigma2, c, Complex(x, h_target_top));
  if (h < h_target_top) h = h_target_top;
  Complex z(x, h);
  Complex m = -1.0 / z;
  if (!damped_fixed_point(map, z, m) || !admissible(map, m)) {
    throw Error(ErrorCode::kNoConvergence, "canonical equation: no solution at the start height");
  }
  newton(map, z, m);

  std::vector<Complex> out;
  out.reserve(heights.size());
  for (const double target : heights) {
    while (h > target) {
      double next = std::max(0.5 * h, target);
      Complex trial = m;
      int refinements = 0;
      while (!solve_level(map, Complex(x, next), trial)) {
        if (++refinements > 40) {
          throw Error(ErrorCode::kNoConvergence,
                      "canonical equation: continuation stalled at Im z = " + std::to_string(next));
        }
        next = h - 0.5 * (h - next);
        trial = m;
      }
      m = trial;
      h = next;
    }
    out.push_back(m);
  }
  return out;
}

double scan_upper(const DeterministicInput& input) {
  const double top = input.true_lambdas(input.M() - 1);
  const double sc = std::sqrt(input.c);
  return top + input.sigma2 * (1.0 + sc) * (1.0 + sc) + 1.0;
}

struct Extremum {
  double w;
  double x;
  bool is_max;
};

// Roots of phi' on (a, b): graded grid with `density` uniform points plus
// geometric points accumulating at both ends, then bisection to full
// precision on each sign change.
void scan_interval(const DeterministicInput& input, double a, double b, int density,
                   std::vector<Extremum>& out) {
  const double width = b - a;
  std::vector<double> s;
  s.reserve(density + 120);
  for (int i = 0; i < density; ++i) s.push_back((i + 0.5) / density);
  for (int k = 1; k <= 40; ++k) {
    const double g = std::ldexp(1.0, -k);
    s.push_back(g);
    s.push_back(1.0 - g);
  }
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());

  // Stay clear of the PoleHit guard of phi'.
  const double guard = 16e-14 * (1.0 + input.true_lambdas(input.M() - 1));
  std::vector<double> w;
  std::vector<double> d;
  w.reserve(s.size());
  d.reserve(s.size());
  for (const double si : s) {
    const double wi = a + width * si;
    if (!(wi > a + guard && wi < b - guard)) continue;
    if (!w.empty() && wi == w.back()) continue;
    w.push_back(wi);
    d.push_back(phi_prime(input, wi));
  }
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    if (!std::isfinite(d[i]) || !std::isfinite(d[i + 1])) continue;
    if ((d[i] > 0.0) == (d[i + 1] > 0.0) && d[i] != 0.0) continue;
    if (d[i] == 0.0 && i > 0) continue;  // counted at the previous cell
    double lo = w[i];
    double hi = w[i + 1];
    const bool rising_lo = d[i] > 0.0;
    while (true) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      const double dm = phi_prime(input, mid);
      if (dm == 0.0) {
        lo = hi = mid;
        break;
      }
      if ((dm > 0.0) == rising_lo) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    const double root = 0.5 * (lo + hi);
    out.push_back({root, phi(input, root), rising_lo});
  }
}

SupportProfile try_find_support(const DeterministicInput& input, int density) {
  const RVector& lam = input.true_lambdas;
  const int M = input.M();
  std::vector<double> poles;
  for (int k = 0; k < M; ++k) {
    if (poles.empty() || lam(k) != poles.back()) poles.push_back(lam(k));
  }

  // Left of the zero pole, phi rises from -inf to w_1^- and falls back.
  double w0 = 10.0 * input.sigma2 * std::sqrt(input.c);
  for (int i = 0; i < 200 && phi_prime(input, -w0) < 0.0; ++i) w0 *= 2.0;
  double right = scan_upper(input);
  for (int i = 0; i < 200 && phi_prime(input, right) < 0.0; ++i) {
    right = poles.back() + 2.0 * (right - poles.back());
  }

  std::vector<Extremum> crit;
  scan_interval(input, -w0, 0.0, density, crit);
  for (std::size_t j = 0; j + 1 < poles.size(); ++j) {
    scan_interval(input, poles[j], poles[j + 1], density, crit);
  }
  scan_interval(input, poles.back(), right, density, crit);

  const double floor = -1e-12 * (1.0 + input.sigma2);
  std::vector<Extremum> kept;
  for (const auto& e : crit) {
    if (e.x >= floor) kept.push_back(e);
  }
  std::sort(kept.begin(), kept.end(), [](const Extremum& a, const Extremum& b) { return a.w < b.w; });

  if (kept.size() < 2 || kept.size() % 2 != 0) {
    throw Error(ErrorCode::kSupportSearchFailed,
                "found " + std::to_string(kept.size()) + " non-negative extrema of phi");
  }
  SupportProfile profile;
  profile.lambdas = lam;
  profile.K = input.K();
  for (std::size_t i = 0; i < kept.size(); i += 2) {
    const Extremum& lo = kept[i];
    const Extremum& hi = kept[i + 1];
    if (!lo.is_max || hi.is_max) {
      throw Error(ErrorCode::kSupportSearchFailed, "extrema of phi do not alternate max/min");
    }
    Cluster cl{lo.w, hi.w, std::max(lo.x, 0.0), std::max(hi.x, 0.0)};
    if (!(cl.x_minus < cl.x_plus)) {
      throw Error(ErrorCode::kSupportSearchFailed, "empty cluster");
    }
    if (!profile.clusters.empty() && cl.x_minus < profile.clusters.back().x_plus) {
      throw Error(ErrorCode::kSupportSearchFailed, "clusters overlap");
    }
    profile.clusters.push_back(cl);
  }
  if (!(profile.clusters.front().w_minus < 0.0 && profile.clusters.front().w_plus > 0.0)) {
    throw Error(ErrorCode::kSupportSearchFailed, "first cluster does not straddle w = 0");
  }

  profile.association.assign(M, -1);
  for (int k = 0; k < M; ++k) {
    for (int q = 0; q < profile.Q(); ++q) {
      if (lam(k) > profile.clusters[q].w_minus && lam(k) < profile.clusters[q].w_plus) {
        profile.association[k] = q;
        break;
      }
    }
    if (profile.association[k] < 0) {
      throw Error(ErrorCode::kSupportSearchFailed,
                  "eigenvalue " + std::to_string(lam(k)) + " is not associated to any cluster");
    }
  }
  return profile;
}

}  // namespace

int DeterministicInput::K() const {
  int k = 0;
  for (Eigen::Index i = 0; i < true_lambdas.size(); ++i) k += true_lambdas(i) != 0.0;
  return k;
}

DeterministicInput make_input(RVector lambdas, double sigma2, double c) {
  if (lambdas.size() < 1) throw Error(ErrorCode::kInvalidArgument, "need at least one eigenvalue");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
    throw Error(ErrorCode::kInvalidArgument, "sigma2 must be positive");
  }
  if (!(c > 0.0 && c < 1.0)) throw Error(ErrorCode::kInvalidArgument, "c must lie in (0, 1)");
  std::sort(lambdas.begin(), lambdas.end());
  const double top = lambdas(lambdas.size() - 1);
  const double cutoff = 1e-12 * (1.0 + std::abs(top));
  for (auto& v : lambdas) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "non-finite eigenvalue");
    if (std::abs(v) <= cutoff) v = 0.0;
    if (v < 0.0) throw Error(ErrorCode::kInvalidArgument, "B B* eigenvalues must be non-negative");
  }
  if (lambdas(0) != 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "B B* must have a nontrivial kernel (K < M)");
  }
  return DeterministicInput{std::move(lambdas), sigma2, c};
}

DeterministicInput make_input(const model::Scenario& scenario) {
  return make_input(model::signal_eigenvalues(scenario), scenario.sigma2, scenario.c());
}

Complex solve_canonical(const DeterministicInput& input, Complex z) {
  if (z.imag() == 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "solve_canonical needs Im z != 0");
  }
  if (z.imag() < 0.0) return std::conj(solve_canonical(input, std::conj(z)));
  const Atoms atoms = atoms_of(input);
  return continuation(atoms, input.sigma2, input.c, z.real(), {z.imag()}).front();
}

double canonical_residual(const DeterministicInput& input, Complex z, Complex m) {
  const Atoms atoms = atoms_of(input);
  const CanonicalMap map{atoms, input.sigma2, input.c};
  return std::abs(m - map.apply(z, m)) / std::abs(m);
}

Complex canonical_derivative(const DeterministicInput& input, Complex z, Complex m) {
  const Atoms atoms = atoms_of(input);
  const CanonicalMap map{atoms, input.sigma2, input.c};
  // dm/dz = (dF/dz) / (1 - dF/dm), dF/dz = (1/M) sum b / d_k^2.
  Complex G;
  Complex dG;
  map.residual(z, m, G, dG);
  const Complex b = 1.0 + input.sigma2 * input.c * m;
  Complex dFdz{0.0, 0.0};
  for (std::size_t j = 0; j < atoms.value.size(); ++j) {
    const Complex d = -z * b + input.sigma2 * (1.0 - input.c) + atoms.value[j] / b;
    dFdz += atoms.count[j] * b / (d * d);
  }
  return dFdz / atoms.M / dG;
}

CVector t_matrix(const DeterministicInput& input, Complex z, Complex m) {
  const Complex b = 1.0 + input.sigma2 * input.c * m;
  CVector t(input.M());
  for (int k = 0; k < input.M(); ++k) {
    t(k) = 1.0 / (-z * b + input.sigma2 * (1.0 - input.c) + input.true_lambdas(k) / b);
  }
  return t;
}

CMatrix t_matrix(const DeterministicInput& input, Complex z, Complex m, const CMatrix& eigenbasis) {
  const CVector t = t_matrix(input, z, m);
  return eigenbasis * t.asDiagonal() * eigenbasis.adjoint();
}

Complex w_of_z(const DeterministicInput& input, Complex z) {
  const Complex m = z.imag() == 0.0 ? limit_to_real(input, z.real()) : solve_canonical(input, z);
  const Complex b = 1.0 + input.sigma2 * input.c * m;
  return z * b * b - input.sigma2 * (1.0 - input.c) * b;
}

Complex limit_to_real(const DeterministicInput& input, double x) {
  constexpr double kHeight = 1e-9;
  const Atoms atoms = atoms_of(input);
  const auto m = continuation(atoms, input.sigma2, input.c, x, {4.0 * kHeight, kHeight});
  // m(x + ih) = m(x) + a sqrt(h) + O(h) covers both the regular case and
  // square-root edges.
  Complex m0 = 2.0 * m[1] - m[0];
  if (m0.imag() < 0.0) m0.imag(0.0);
  return m0;
}

double f_of_w(const DeterministicInput& input, double w) {
  const RVector& lam = input.true_lambdas;
  const double guard = 1e-14 * (1.0 + lam(lam.size() - 1));
  double f = 0.0;
  for (Eigen::Index k = 0; k < lam.size(); ++k) {
    const double d = lam(k) - w;
    if (std::abs(d) < guard) throw Error(ErrorCode::kPoleHit, "w coincides with an eigenvalue of B B*");
    f += 1.0 / d;
  }
  return f / static_cast<double>(lam.size());
}

double phi(const DeterministicInput& input, double w) {
  const double s = input.sigma2;
  const double g = 1.0 - s * input.c * f_of_w(input, w);
  return w * g * g + s * (1.0 - input.c) * g;
}

double phi_prime(const DeterministicInput& input, double w) {
  const RVector& lam = input.true_lambdas;
  const double guard = 1e-14 * (1.0 + lam(lam.size() - 1));
  double f = 0.0;
  double df = 0.0;
  for (Eigen::Index k = 0; k < lam.size(); ++k) {
    const double d = lam(k) - w;
    if (std::abs(d) < guard) throw Error(ErrorCode::kPoleHit, "w coincides with an eigenvalue of B B*");
    f += 1.0 / d;
    df += 1.0 / (d * d);
  }
  const double inv_m = 1.0 / static_cast<double>(lam.size());
  f *= inv_m;
  df *= inv_m;
  const double s = input.sigma2;
  const double sc = s * input.c;
  const double g = 1.0 - sc * f;
  return g * g - 2.0 * w * g * sc * df - s * (1.0 - input.c) * sc * df;
}

SupportProfile find_support(const DeterministicInput& input) {
  int density = 512;
  for (int attempt = 0;; ++attempt) {
    try {
      return try_find_support(input, density);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kSupportSearchFailed || attempt == 3) throw;
      density *= 2;
    }
  }
}

SeparationReport check_separation(const SupportProfile& profile) {
  SeparationReport r;
  const Eigen::Index M = profile.lambdas.size();
  const Cluster& first = profile.clusters.front();
  if (profile.K == 0) {
    r.a5 = true;
    r.a5_margin = kInf;
  } else {
    const double smallest_signal = profile.lambdas(M - profile.K);
    r.a5_margin = smallest_signal - first.w_plus;
    r.a5 = r.a5_margin > 0.0 && profile.association[M - profile.K] != 0;
  }
  r.a6_left_margin = first.x_minus;
  if (profile.Q() >= 2) {
    r.a6_gap_margin = profile.clusters[1].x_minus - first.x_plus;
    r.a6 = r.a6_left_margin > 0.0 && r.a6_gap_margin > 0.0;
  } else {
    r.a6_gap_margin = kInf;
    r.a6 = r.a6_left_margin > 0.0 && profile.K == 0;
  }
  return r;
}

SeparationReport check_separation(const SupportProfile& profile, const DeterministicInput& input) {
  SupportProfile p = profile;
  p.lambdas = input.true_lambdas;
  p.K = input.K();
  return check_separation(p);
}

bool ContourSpec::in_first_band(double x) const {
  return x >= t1_minus - epsilon && x <= t1_plus + epsilon;
}

bool ContourSpec::in_second_band(double x) const {
  return x >= t2_minus - epsilon && x <= t2_plus + epsilon;
}

bool ContourSpec::in_band(double x) const { return in_first_band(x) || in_second_band(x); }

ContourSpec choose_contour(const SupportProfile& profile) {
  const SeparationReport rep = check_separation(profile);
  if (!rep.separated()) {
    throw Error(ErrorCode::kSeparationViolated,
                std::string("cannot isolate the noise cluster (signal separation ") + (rep.a5 ? "ok" : "fails") +
                    ", noise cluster isolation " + (rep.a6 ? "ok" : "fails") + ")");
  }
  constexpr double gamma = 0.25;
  const Cluster& first = profile.clusters.front();
  double x2_minus = 0.0;
  double xq_plus = 0.0;
  if (profile.Q() >= 2) {
    x2_minus = profile.clusters[1].x_minus;
    xq_plus = profile.clusters.back().x_plus;
  } else {
    x2_minus = 2.0 * first.x_plus;
    xq_plus = x2_minus;
  }
  const double gap = x2_minus - first.x_plus;
  ContourSpec cs;
  cs.t1_minus = first.x_minus * (1.0 - gamma);
  cs.t1_plus = first.x_plus + gamma * gap;
  cs.t2_minus = x2_minus - gamma * gap;
  cs.t2_plus = xq_plus + gamma * xq_plus;
  cs.epsilon = std::min(cs.t1_minus, gamma * gap) / 4.0;
  cs.y = std::max(3.5 * cs.epsilon, 0.5 * (cs.t1_plus - cs.t1_minus));
  return cs;
}

double distance_to_support(const SupportProfile& profile, Complex z) {
  double best = kInf;
  for (const auto& cl : profile.clusters) {
    const double dx = z.real() < cl.x_minus ? cl.x_minus - z.real()
                      : z.real() > cl.x_plus ? z.real() - cl.x_plus
                                             : 0.0;
    best = std::min(best, std::hypot(dx, z.imag()));
  }
  return best;
}

}  // namespace gmusic::rmt
