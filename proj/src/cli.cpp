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

#include "gmusic/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string_view>

#include "CLI11.hpp"
#include "json.hpp"

#include "gmusic/estimator.hpp"
#include "gmusic/experiments.hpp"
#include "gmusic/model.hpp"
#include "gmusic/rmt.hpp"
#include "gmusic/spectrum.hpp"

namespace gmusic::cli {

namespace {

using nlohmann::json;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void parse_fail(const std::string& name, int line, const std::string& what) {
  throw Error(ErrorCode::kParseError, name + ":" + std::to_string(line) + ": " + what);
}

std::ifstream open_input(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIoError, "cannot open " + path + " for reading");
  return f;
}

std::string read_text_file(const std::string& path) {
  auto f = open_input(path);
  std::ostringstream ss;
  ss << f.rdbuf();
  if (f.bad()) throw Error(ErrorCode::kIoError, "failed reading " + path);
  return ss.str();
}

void write_output(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    out.flush();
    if (!out) throw Error(ErrorCode::kIoError, "cannot write to standard output");
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIoError, "cannot open " + path + " for writing");
  f << text;
  f.close();
  if (!f) throw Error(ErrorCode::kIoError, "failed writing " + path);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// Nested JSON as `key,value` lines with dotted keys.
void flatten(const json& j, const std::string& key, std::string& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten(v, key.empty() ? k : key + "." + k, out);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], key + "." + std::to_string(i), out);
  } else if (j.is_number_float()) {
    out += key + "," + format_double(j.get<double>()) + "\n";
  } else if (j.is_string()) {
    out += key + "," + j.get<std::string>() + "\n";
  } else if (j.is_null()) {
    out += key + ",\n";
  } else {
    out += key + "," + j.dump() + "\n";
  }
}

std::string render(const json& doc, const std::string& format) {
  if (format == "csv") {
    std::string out = "key,value\n";
    flatten(doc, "", out);
    return out;
  }
  return doc.dump(2) + "\n";
}

json contour_json(const rmt::ContourSpec& cs) {
  return json{{"t1_minus", cs.t1_minus}, {"t1_plus", cs.t1_plus}, {"t2_minus", cs.t2_minus},
              {"t2_plus", cs.t2_plus},   {"epsilon", cs.epsilon}, {"y", cs.y}};
}

struct Globals {
  std::uint64_t seed = experiments::kDefaultBaseSeed;
  std::string out;
  std::string format;
  int threads = 1;
  double tol = 1e-10;
};

// Name of the step currently running, for diagnostics.
struct Stage {
  std::string name = "arguments";
};

// ---- support ----

struct SupportArgs {
  std::string eigs;
  double sigma2 = 1.0;
  double c = 0.5;
};

int cmd_support(const SupportArgs& a, const Globals& g, Stage& stage, std::ostream& out) {
  stage.name = "read-input";
  const RVector lambdas = read_eigenvalue_file(a.eigs);
  stage.name = "support";
  const auto input = rmt::make_input(lambdas, a.sigma2, a.c);
  const auto profile = rmt::find_support(input);
  const auto verdict = rmt::check_separation(profile, input);

  json clusters = json::array();
  for (const auto& cl : profile.clusters) {
    clusters.push_back({{"x_minus", cl.x_minus}, {"x_plus", cl.x_plus},
                        {"w_minus", cl.w_minus}, {"w_plus", cl.w_plus}});
  }
  json doc{{"M", input.M()},
           {"K", input.K()},
           {"sigma2", input.sigma2},
           {"c", input.c},
           {"Q", profile.Q()},
           {"clusters", clusters},
           {"association", profile.association},
           {"separation",
            {{"a5", verdict.a5},
             {"a6", verdict.a6},
             {"separated", verdict.separated()},
             {"a5_margin", finite_or_null(verdict.a5_margin)},
             {"a6_left_margin", finite_or_null(verdict.a6_left_margin)},
             {"a6_gap_margin", finite_or_null(verdict.a6_gap_margin)}}},
           {"contour", nullptr}};
  std::optional<Error> failure;
  stage.name = "contour";
  try {
    doc["contour"] = contour_json(rmt::choose_contour(profile));
  } catch (const Error& e) {
    failure = e;
  }
  stage.name = "write-output";
  write_output(g.out, render(doc, g.format.empty() ? "json" : g.format), out);
  if (failure) {
    stage.name = "contour";
    throw *failure;
  }
  return 0;
}

// ---- estimate ----

struct EstimateArgs {
  std::string input;
  int K = 0;
  std::optional<double> sigma2;
  bool estimate_sigma2 = false;
  int grid = 0;
  std::string intervals;
  bool topk = false;
  std::vector<double> contour;
  std::string method = "residue";
  std::string spectrum;
};

std::vector<estimator::AngleInterval> parse_intervals(const std::string& text) {
  std::vector<estimator::AngleInterval> out;
  std::istringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    char* end = nullptr;
    estimator::AngleInterval iv;
    bool ok = colon != std::string::npos;
    if (ok) {
      const std::string lo = item.substr(0, colon);
      const std::string hi = item.substr(colon + 1);
      iv.lo = std::strtod(lo.c_str(), &end);
      ok = !lo.empty() && *end == '\0';
      iv.hi = std::strtod(hi.c_str(), &end);
      ok = ok && !hi.empty() && *end == '\0';
    }
    if (!ok || !(iv.lo < iv.hi)) {
      throw Error(ErrorCode::kInvalidArgument, "--intervals expects lo:hi pairs, got '" + item + "'");
    }
    out.push_back(iv);
  }
  return out;
}

// User thresholds t1-, t1+, t2-, t2+ completed with the same eps and y
// rules as the automatic contour.
rmt::ContourSpec user_contour(const std::vector<double>& t) {
  if (t.size() != 4 || !(0.0 < t[0] && t[0] < t[1] && t[1] < t[2] && t[2] < t[3])) {
    throw Error(ErrorCode::kInvalidArgument, "--contour needs 0 < t1m < t1p < t2m < t2p");
  }
  rmt::ContourSpec cs;
  cs.t1_minus = t[0];
  cs.t1_plus = t[1];
  cs.t2_minus = t[2];
  cs.t2_plus = t[3];
  cs.epsilon = std::min(t[0], 0.5 * (t[2] - t[1])) / 4.0;
  cs.y = std::max(3.5 * cs.epsilon, 0.5 * (t[1] - t[0]));
  return cs;
}

// Inverts the isolated-eigenvalue map x = (l + s c)(l + s) / l of a noise-only
// bulk, i.e. the deterministic w evaluated at an observed signal eigenvalue.
double plugin_signal_eigenvalue(double x, double sigma2, double c) {
  const double edge = sigma2 * (1.0 + std::sqrt(c)) * (1.0 + std::sqrt(c));
  if (!(x > edge)) {
    throw Error(ErrorCode::kSeparationViolated,
                "eigenvalue " + format_double(x) + " is not above the noise edge " + format_double(edge));
  }
  const double p = sigma2 * (1.0 + c) - x;
  const double disc = p * p - 4.0 * sigma2 * sigma2 * c;
  return 0.5 * (-p + std::sqrt(std::max(disc, 0.0)));
}

json estimates_json(const estimator::DoAEstimates& d) {
  return json{{"estimates", d.estimates}, {"residuals", d.residuals}};
}

int cmd_estimate(const EstimateArgs& a, const Globals& g, Stage& stage, std::ostream& out) {
  if (a.sigma2.has_value() == a.estimate_sigma2) {
    throw Error(ErrorCode::kInvalidArgument, "give exactly one of --sigma2 and --estimate-sigma2");
  }
  if (a.sigma2 && !(*a.sigma2 >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "--sigma2 must be >= 0");
  if (a.grid < 0) throw Error(ErrorCode::kInvalidArgument, "--grid must be >= 0");
  if (!a.intervals.empty() && a.topk) {
    throw Error(ErrorCode::kInvalidArgument, "--intervals and --topk are exclusive");
  }
  const auto intervals = parse_intervals(a.intervals);
  if (!a.intervals.empty() && static_cast<int>(intervals.size()) != a.K) {
    throw Error(ErrorCode::kInvalidArgument, "--intervals must list K intervals");
  }
  std::optional<rmt::ContourSpec> contour;
  if (!a.contour.empty()) contour = user_contour(a.contour);

  stage.name = "read-input";
  const CMatrix X = read_complex_matrix_file(a.input);
  const int M = static_cast<int>(X.rows());
  const int N = static_cast<int>(X.cols());
  if (a.K < 1 || a.K >= M) throw Error(ErrorCode::kInvalidArgument, "K must satisfy 1 <= K < M");

  stage.name = "decompose";
  auto spec = spectrum::decompose(X, 0.0);
  double sigma2 = a.sigma2.value_or(0.0);
  if (a.estimate_sigma2) {
    // Mean of the M - K smallest eigenvalues.
    sigma2 = spec.lambdas.head(M - a.K).mean();
  }
  spec.sigma2 = sigma2;
  spec.omegas = spectrum::secular_roots(spec.lambdas, spec.rho());

  json doc{{"M", M}, {"N", N}, {"K", a.K}, {"sigma2", sigma2}, {"sigma2_estimated", a.estimate_sigma2}};

  std::string source = "none";
  if (sigma2 > 0.0 && contour) {
    source = "user";
  } else if (sigma2 > 0.0) {
    stage.name = "support";
    source = "plug-in";
    RVector lambdas = RVector::Zero(M);
    json plugin = json::array();
    for (int k = M - a.K; k < M; ++k) {
      lambdas(k) = plugin_signal_eigenvalue(spec.lambdas(k), sigma2, spec.c);
      plugin.push_back(lambdas(k));
    }
    doc["plugin_signal_eigenvalues"] = plugin;
    const auto profile = rmt::find_support(rmt::make_input(lambdas, sigma2, spec.c));
    stage.name = "contour";
    contour = rmt::choose_contour(profile);
  }
  doc["contour_source"] = source;
  doc["contour"] = sigma2 > 0.0 ? contour_json(*contour) : json(nullptr);

  stage.name = "weights";
  estimator::WeightVector weights;
  if (sigma2 > 0.0) {
    const auto method = a.method == "quadrature" ? estimator::WeightMethod::kQuadrature
                                                 : estimator::WeightMethod::kResidue;
    weights = estimator::improved_weights(spec, *contour, method);
    doc["weight_method"] = a.method;
  } else {
    weights = estimator::classical_weights(spec, a.K);
    doc["weight_method"] = "classical";
  }
  doc["weights"] = std::vector<double>(weights.rho.begin(), weights.rho.end());
  doc["weight_imag_max"] = weights.imag.cwiseAbs().maxCoeff();

  stage.name = "pseudo-spectrum";
  const int G = a.grid > 0 ? a.grid : estimator::default_grid_size(spec);
  const auto ps = estimator::pseudo_spectrum(spec, a.K, weights, estimator::uniform_grid(G));
  doc["grid_size"] = G;

  stage.name = "extraction";
  const estimator::QuadraticForm improved(spec, weights.rho);
  const estimator::QuadraticForm classical(spec, estimator::classical_weights(spec, a.K).rho);
  estimator::DoAEstimates est_improved;
  estimator::DoAEstimates est_classical;
  if (!intervals.empty()) {
    doc["extraction"] = "intervals";
    est_improved = estimator::extract_doas_intervals(improved, intervals, g.tol);
    est_classical = estimator::extract_doas_intervals(classical, intervals, g.tol);
  } else {
    doc["extraction"] = "topk";
    est_improved = estimator::extract_doas_topk(ps, a.K, improved, g.tol);
    auto ps_classical = ps;
    ps_classical.values_improved = ps.values_classical;
    est_classical = estimator::extract_doas_topk(ps_classical, a.K, classical, g.tol);
  }
  doc["improved"] = estimates_json(est_improved);
  doc["classical"] = estimates_json(est_classical);

  stage.name = "write-output";
  if (!a.spectrum.empty()) {
    std::string text = "theta,eta_classical,eta_improved\n";
    for (int i = 0; i < G; ++i) {
      text += format_double(ps.grid(i)) + "," + format_double(ps.values_classical(i)) + "," +
              format_double(ps.values_improved(i)) + "\n";
    }
    write_output(a.spectrum, text, out);
  }
  write_output(g.out, render(doc, g.format.empty() ? "json" : g.format), out);
  return 0;
}

// ---- simulate ----

struct SimulateArgs {
  int M = 0;
  int N = 0;
  std::vector<double> angles;
  std::vector<double> powers;
  double sigma2 = 1.0;
  std::uint64_t scenario_seed = model::kDefaultSourceSeed;
  std::string source_model = "random_phase";
  std::string truth;
};

int cmd_simulate(const SimulateArgs& a, const Globals& g, Stage& stage, std::ostream& out) {
  if (!(a.sigma2 >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "--sigma2 must be >= 0");
  stage.name = "scenario";
  model::ScenarioConfig cfg;
  cfg.M = a.M;
  cfg.N = a.N;
  cfg.angles = a.angles;
  cfg.powers = a.powers;
  cfg.sigma2 = a.sigma2;
  cfg.source_seed = a.scenario_seed;
  cfg.source_model = a.source_model == "exact_eigenvalues" ? model::SourceModel::kExactEigenvalues
                                                           : model::SourceModel::kRandomPhase;
  const auto scenario = model::build_scenario(cfg);
  stage.name = "sample";
  const auto obs = model::sample_observation(scenario, g.seed);
  const RVector lambdas = model::signal_eigenvalues(scenario);

  stage.name = "write-output";
  std::ostringstream matrix;
  write_complex_matrix(matrix, obs.sigma_matrix);
  write_output(g.out, matrix.str(), out);

  std::string truth_path = a.truth;
  if (truth_path.empty() && !g.out.empty() && g.out != "-") truth_path = g.out + ".truth.json";
  if (!truth_path.empty()) {
    json truth{{"M", scenario.M},
               {"N", scenario.N},
               {"K", scenario.K},
               {"c", scenario.c()},
               {"sigma2", scenario.sigma2},
               {"angles", scenario.angles},
               {"powers", a.powers},
               {"source_model", a.source_model},
               {"scenario_seed", a.scenario_seed},
               {"seed", g.seed},
               {"signal_eigenvalues",
                std::vector<double>(lambdas.end() - scenario.K, lambdas.end())}};
    write_output(truth_path, render(truth, g.format.empty() ? "json" : g.format), out);
  }
  return 0;
}

// ---- mc-* ----

struct McArgs {
  std::string config;
  int trials = 0;
  std::vector<int> N_list;
};

int cmd_mc(const std::string& which, const McArgs& a, const Globals& g, bool seed_given,
           Stage& stage, std::ostream& out) {
  stage.name = "config";
  experiments::ExperimentConfig cfg;
  if (!a.config.empty()) cfg = experiments::config_from_json(read_text_file(a.config));
  if (seed_given) cfg.base_seed = g.seed;
  cfg.threads = g.threads;
  cfg.tol = g.tol;
  if (a.trials > 0) cfg.trials = a.trials;
  if (!a.N_list.empty()) cfg.N_list = a.N_list;
  experiments::validate(cfg);

  stage.name = which;
  experiments::ExperimentReport report;
  if (which == "mc-consistency") {
    report = experiments::run_uniform_consistency(cfg);
  } else if (which == "mc-doa") {
    report = experiments::run_doa_consistency(cfg);
  } else {
    report = experiments::run_escape_diagnostics(cfg);
  }
  stage.name = "write-output";
  const auto format = g.format == "json" ? experiments::ReportFormat::kJson
                                         : experiments::ReportFormat::kCsv;
  write_output(g.out, experiments::format_report(report, format), out);
  return 0;
}

Complex parse_entry(const std::string& text, const std::string& name, int line) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double re = std::strtod(begin, &end);
  if (end == begin || (*end != '+' && *end != '-')) parse_fail(name, line, "bad entry '" + text + "'");
  const char* im_begin = end;
  const double im = std::strtod(im_begin, &end);
  if (end == im_begin || *end != 'i' || end[1] != '\0') parse_fail(name, line, "bad entry '" + text + "'");
  if (!std::isfinite(re) || !std::isfinite(im)) parse_fail(name, line, "non-finite entry");
  return {re, im};
}

}  // namespace

int exit_code(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return 1;
    case ErrorCode::kParseError: return 2;
    case ErrorCode::kSupportSearchFailed: return 3;
    case ErrorCode::kSeparationViolated: return 4;
    case ErrorCode::kPoleTooClose: return 5;
    case ErrorCode::kQuadratureNoConvergence: return 6;
    case ErrorCode::kNoConvergence: return 7;
    case ErrorCode::kNumericalFailure: return 8;
    case ErrorCode::kDegenerateSteering: return 9;
    case ErrorCode::kPoleHit: return 10;
    case ErrorCode::kEmptyInterval: return 11;
    case ErrorCode::kTooFewMinima: return 12;
    case ErrorCode::kIoError: return 13;
  }
  return 1;
}

RVector read_eigenvalues(std::istream& in, const std::string& name) {
  std::vector<double> values;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s(trim(raw));
    if (s.empty() || s[0] == '#') continue;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') parse_fail(name, line, "expected one number, got '" + s + "'");
    if (!std::isfinite(v)) parse_fail(name, line, "non-finite value");
    values.push_back(v);
  }
  if (in.bad()) throw Error(ErrorCode::kIoError, "failed reading " + name);
  if (values.empty()) throw Error(ErrorCode::kParseError, name + ": no eigenvalues");
  return Eigen::Map<const RVector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

RVector read_eigenvalue_file(const std::string& path) {
  auto f = open_input(path);
  return read_eigenvalues(f, path);
}

CMatrix read_complex_matrix(std::istream& in, const std::string& name) {
  std::string raw;
  int line = 0;
  long M = -1;
  long N = -1;
  while (M < 0 && std::getline(in, raw)) {
    ++line;
    const std::string s(trim(raw));
    if (s.empty()) continue;
    std::istringstream hs(s);
    std::string hash;
    std::string word;
    std::string rest;
    if (!(hs >> hash >> word >> M >> N) || hash != "#" || word != "complex" || (hs >> rest) ||
        M < 1 || N < 1) {
      parse_fail(name, line, "expected header '# complex M N'");
    }
  }
  if (M < 0) throw Error(ErrorCode::kParseError, name + ": missing header");
  CMatrix X(M, N);
  long row = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s(trim(raw));
    if (s.empty() || s[0] == '#') continue;
    if (row == M) parse_fail(name, line, "more than " + std::to_string(M) + " rows");
    std::istringstream ls(s);
    std::string item;
    long col = 0;
    while (std::getline(ls, item, ',')) {
      if (col == N) parse_fail(name, line, "more than " + std::to_string(N) + " entries");
      X(row, col++) = parse_entry(std::string(trim(item)), name, line);
    }
    if (col != N) parse_fail(name, line, "expected " + std::to_string(N) + " entries");
    ++row;
  }
  if (in.bad()) throw Error(ErrorCode::kIoError, "failed reading " + name);
  if (row != M) {
    throw Error(ErrorCode::kParseError, name + ": expected " + std::to_string(M) + " rows, found " +
                                            std::to_string(row));
  }
  return X;
}

CMatrix read_complex_matrix_file(const std::string& path) {
  auto f = open_input(path);
  return read_complex_matrix(f, path);
}

void write_complex_matrix(std::ostream& out, const CMatrix& matrix) {
  out << "# complex " << matrix.rows() << " " << matrix.cols() << "\n";
  char buf[80];
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.16e%+.16ei", matrix(i, j).real(), matrix(i, j).imag());
      if (j > 0) out << ",";
      out << buf;
    }
    out << "\n";
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Subspace direction-of-arrival estimation for large arrays.", "gmusic"};
  app.require_subcommand(1);
  Globals g;
  auto* seed_opt = app.add_option("--seed", g.seed, "Base seed (default 20240601)");
  app.add_option("--out", g.out, "Output path, standard output when absent");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--threads", g.threads, "Worker threads for experiments")
      ->check(CLI::Range(1, 1024));
  app.add_option("--tol", g.tol, "Angle refinement tolerance")
      ->check(CLI::PositiveNumber);

  SupportArgs sa;
  auto* support = app.add_subcommand("support", "Support clusters and contour of a deterministic spectrum");
  support->fallthrough();
  support->add_option("--eigs", sa.eigs, "Eigenvalues of B B*, one per line")->required();
  support->add_option("--sigma2", sa.sigma2, "Noise variance")->required();
  support->add_option("--c", sa.c, "Aspect ratio M / N")->required();

  EstimateArgs ea;
  auto* estimate = app.add_subcommand("estimate", "Pseudo-spectra and angle estimates from a data matrix");
  estimate->fallthrough();
  estimate->add_option("--input", ea.input, "Complex matrix file")->required();
  estimate->add_option("--K", ea.K, "Number of sources")->required();
  estimate->add_option("--sigma2", ea.sigma2, "Noise variance");
  estimate->add_flag("--estimate-sigma2", ea.estimate_sigma2, "Estimate the noise variance");
  estimate->add_option("--grid", ea.grid, "Pseudo-spectrum grid size, 0 for min(N^2, 20000)");
  estimate->add_option("--intervals", ea.intervals, "Search intervals lo:hi,lo:hi,...");
  estimate->add_flag("--topk", ea.topk, "Use the K deepest grid minima (default)");
  estimate->add_option("--contour", ea.contour, "Contour thresholds t1m,t1p,t2m,t2p")->delimiter(',');
  estimate->add_option("--method", ea.method, "Weight method")
      ->check(CLI::IsMember({"residue", "quadrature"}));
  estimate->add_option("--spectrum", ea.spectrum, "Write both pseudo-spectra as CSV");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Sample one data matrix of a scenario");
  simulate->fallthrough();
  simulate->add_option("--M", sim.M, "Sensors")->required();
  simulate->add_option("--N", sim.N, "Snapshots")->required();
  simulate->add_option("--angles", sim.angles, "Source angles (rad)")->delimiter(',');
  simulate->add_option("--powers", sim.powers, "Source powers")->delimiter(',');
  simulate->add_option("--sigma2", sim.sigma2, "Noise variance");
  simulate->add_option("--scenario-seed", sim.scenario_seed, "Seed of the source matrix");
  simulate->add_option("--source-model", sim.source_model, "Source matrix model")
      ->check(CLI::IsMember({"random_phase", "exact_eigenvalues"}));
  simulate->add_option("--truth", sim.truth, "Truth file, <out>.truth.json by default");

  McArgs ma;
  std::vector<CLI::App*> mc;
  for (const char* name : {"mc-consistency", "mc-doa", "mc-escape"}) {
    auto* sub = app.add_subcommand(name, "Monte Carlo experiment");
    sub->fallthrough();
    sub->add_option("--config", ma.config, "Experiment configuration (JSON)");
    sub->add_option("--trials", ma.trials, "Override the trial count")->check(CLI::PositiveNumber);
    sub->add_option("--N", ma.N_list, "Override N_list")->delimiter(',');
    mc.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : exit_code(ErrorCode::kInvalidArgument);
  }

  Stage stage;
  try {
    if (*support) return cmd_support(sa, g, stage, out);
    if (*estimate) return cmd_estimate(ea, g, stage, out);
    if (*simulate) return cmd_simulate(sim, g, stage, out);
    for (auto* sub : mc) {
      if (*sub) return cmd_mc(sub->get_name(), ma, g, seed_opt->count() > 0, stage, out);
    }
  } catch (const Error& e) {
    err << "gmusic: " << stage.name << ": " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << "gmusic: " << stage.name << ": NumericalFailure: " << e.what() << "\n";
    return exit_code(ErrorCode::kNumericalFailure);
  }
  return exit_code(ErrorCode::kInvalidArgument);
}

}  // namespace gmusic::cli
