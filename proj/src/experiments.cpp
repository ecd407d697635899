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

#include "gmusic/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <limits>
#include <thread>

#include "json.hpp"

#include "gmusic/error.hpp"
#include "gmusic/random.hpp"
#include "gmusic/rmt.hpp"
#include "gmusic/spectrum.hpp"

namespace gmusic::experiments {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

enum class Kind { kConsistency, kDoa, kEscape };

const char* name_of(Kind kind) {
  switch (kind) {
    case Kind::kConsistency: return "uniform_consistency";
    case Kind::kDoa: return "doa_consistency";
    case Kind::kEscape: return "escape_diagnostics";
  }
  return "";
}

struct MetricSlot {
  std::string name;
  int source_index = -1;
  bool is_count = false;
};

std::vector<MetricSlot> metric_slots(Kind kind, int K) {
  std::vector<MetricSlot> slots;
  switch (kind) {
    case Kind::kConsistency:
      slots = {{"sup_err_improved"}, {"sup_err_classical"}};
      break;
    case Kind::kDoa:
      for (int k = 0; k < K; ++k) slots.push_back({"n_abs_err_improved", k});
      for (int k = 0; k < K; ++k) slots.push_back({"n_abs_err_classical", k});
      slots.push_back({"angular_rmse_improved"});
      slots.push_back({"angular_rmse_classical"});
      break;
    case Kind::kEscape:
      slots = {{"escape_e1_count", -1, true},
               {"escape_e2_count", -1, true},
               {"count_identity_violation_count", -1, true},
               {"interlacing_violation_count", -1, true},
               {"band_escape_count", -1, true}};
      break;
  }
  return slots;
}

// Everything fixed for one N.
struct Setup {
  int N = 0;
  int M = 0;
  int K = 0;
  model::Scenario scenario;
  std::optional<rmt::ContourSpec> contour;
  std::optional<ErrorCode> setup_failure;
  RVector grid;
  RVector truth;
  std::vector<estimator::AngleInterval> intervals;
};

struct TrialResult {
  std::optional<ErrorCode> failure;
  std::vector<double> values;
};

double min_spacing(const std::vector<double>& angles) {
  if (angles.size() < 2) return 2.0 * kPi;
  double s = 2.0 * kPi - (angles.back() - angles.front());
  for (std::size_t k = 1; k < angles.size(); ++k) s = std::min(s, angles[k] - angles[k - 1]);
  return s;
}

Setup make_setup(const ExperimentConfig& cfg, Kind kind, int N) {
  Setup st;
  st.N = N;
  st.M = static_cast<int>(std::lround(cfg.c * N));
  if (std::abs(static_cast<double>(st.M) / N - cfg.c) > 1e-2) {
    throw Error(ErrorCode::kInvalidArgument,
                "N = " + std::to_string(N) + " cannot keep M / N within 1e-2 of c");
  }
  model::ScenarioConfig sc_cfg;
  sc_cfg.M = st.M;
  sc_cfg.N = N;
  sc_cfg.angles = cfg.angles;
  sc_cfg.powers = cfg.powers;
  sc_cfg.sigma2 = cfg.sigma2.value_or(1.0);
  sc_cfg.source_seed = cfg.scenario_seed;
  sc_cfg.source_model = cfg.source_model;
  st.scenario = model::build_scenario(sc_cfg);
  st.K = st.scenario.K;

  const RVector lambdas = model::signal_eigenvalues(st.scenario);
  const double c_N = st.scenario.c();
  if (!cfg.sigma2) {
    st.scenario.sigma2 = lambdas(st.M - st.K) / (cfg.threshold_factor * std::sqrt(c_N));
  }
  const double sigma2 = st.scenario.sigma2;

  if (sigma2 > 0.0) {
    try {
      const auto input = rmt::make_input(cfg.contour_signal_scale * lambdas, sigma2, c_N);
      st.contour = rmt::choose_contour(rmt::find_support(input));
    } catch (const Error& e) {
      st.setup_failure = e.code();
    }
  }

  if (kind == Kind::kConsistency) {
    const int G = cfg.grid_size > 0 ? cfg.grid_size
                                    : static_cast<int>(std::min<long>(static_cast<long>(N) * N, cfg.grid_cap));
    st.grid = estimator::uniform_grid(G);
    const model::GroundTruth gt(st.scenario);
    st.truth.resize(G);
    for (int i = 0; i < G; ++i) st.truth(i) = gt.eta(st.grid(i));
  }
  if (kind == Kind::kDoa) {
    const double h = cfg.interval_half_width > 0.0 ? cfg.interval_half_width
                                                   : 0.45 * min_spacing(st.scenario.angles);
    for (double th : st.scenario.angles) st.intervals.push_back({th - h, th + h});
  }
  return st;
}

estimator::WeightVector weights_for(const Setup& st, const spectrum::SpectralDecomposition& spec,
                                    const ExperimentConfig& cfg) {
  if (spec.sigma2 == 0.0) return estimator::classical_weights(spec, st.K);
  return estimator::improved_weights(spec, *st.contour, cfg.method);
}

std::vector<double> trial_values(Kind kind, const Setup& st, const ExperimentConfig& cfg,
                                 const spectrum::SpectralDecomposition& spec) {
  const int M = st.M;
  const int K = st.K;
  std::vector<double> v;
  switch (kind) {
    case Kind::kConsistency: {
      const auto ps = estimator::pseudo_spectrum(spec, K, weights_for(st, spec, cfg), st.grid);
      v.push_back((ps.values_improved - st.truth).cwiseAbs().maxCoeff());
      v.push_back((ps.values_classical - st.truth).cwiseAbs().maxCoeff());
      break;
    }
    case Kind::kDoa: {
      const estimator::QuadraticForm improved(spec, weights_for(st, spec, cfg).rho);
      const estimator::QuadraticForm classical(spec, estimator::classical_weights(spec, K).rho);
      const auto a = estimator::extract_doas_intervals(improved, st.intervals, cfg.tol);
      const auto b = estimator::extract_doas_intervals(classical, st.intervals, cfg.tol);
      double se_a = 0.0;
      double se_b = 0.0;
      for (int k = 0; k < K; ++k) {
        const double ea = a.estimates[k] - st.scenario.angles[k];
        se_a += ea * ea;
        v.push_back(st.N * std::abs(ea));
      }
      for (int k = 0; k < K; ++k) {
        const double eb = b.estimates[k] - st.scenario.angles[k];
        se_b += eb * eb;
        v.push_back(st.N * std::abs(eb));
      }
      v.push_back(std::sqrt(se_a / K));
      v.push_back(std::sqrt(se_b / K));
      break;
    }
    case Kind::kEscape: {
      const rmt::ContourSpec& cs = *st.contour;
      bool e1 = false;
      bool e2 = false;
      int below = 0;
      for (int k = 0; k < M; ++k) {
        e1 = e1 || !cs.in_band(spec.lambdas(k));
        e2 = e2 || !cs.in_band(spec.omegas(k));
        below += spec.lambdas(k) < cs.t1_plus;
      }
      const bool count = below != M - K;
      // t1- < l_1 < w_1 < ... < l_{M-K} < w_{M-K} < t1+ < t2- < l_{M-K+1} < ... < w_M < t2+.
      std::vector<double> chain{cs.t1_minus};
      for (int k = 0; k < M; ++k) {
        if (k == M - K) {
          chain.push_back(cs.t1_plus);
          chain.push_back(cs.t2_minus);
        }
        chain.push_back(spec.lambdas(k));
        chain.push_back(spec.omegas(k));
      }
      chain.push_back(cs.t2_plus);
      bool ordered = true;
      for (std::size_t i = 1; i < chain.size(); ++i) ordered = ordered && chain[i - 1] < chain[i];
      v = {double(e1), double(e2), double(count), double(!ordered), double(e1 || e2 || count)};
      break;
    }
  }
  return v;
}

TrialResult run_trial(Kind kind, const Setup& st, const ExperimentConfig& cfg, int trial) {
  TrialResult r;
  if (st.setup_failure) {
    r.failure = st.setup_failure;
    return r;
  }
  if (kind == Kind::kEscape && !st.contour) {
    r.failure = ErrorCode::kInvalidArgument;
    return r;
  }
  try {
    const std::uint64_t seed = derive_seed(cfg.base_seed, static_cast<std::uint64_t>(st.N),
                                           static_cast<std::uint64_t>(trial));
    const auto obs = model::sample_observation(st.scenario, seed);
    const auto spec = spectrum::decompose(obs, st.scenario.sigma2);
    r.values = trial_values(kind, st, cfg, spec);
  } catch (const Error& e) {
    r.failure = e.code();
    r.values.clear();
  }
  return r;
}

std::vector<TrialResult> run_trials(Kind kind, const Setup& st, const ExperimentConfig& cfg) {
  std::vector<TrialResult> results(cfg.trials);
  std::atomic<int> next{0};
  std::exception_ptr fatal;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (int t = next++; t < cfg.trials && !failed; t = next++) {
      try {
        results[t] = run_trial(kind, st, cfg, t);
      } catch (...) {
        if (!failed.exchange(true)) fatal = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min(cfg.threads, cfg.trials));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (fatal) std::rethrow_exception(fatal);
  return results;
}

// Linear interpolation between order statistics.
double quantile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return kNaN;
  const double h = (sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - lo) * (sorted[hi] - sorted[lo]);
}

ExperimentReport run(Kind kind, const ExperimentConfig& cfg) {
  validate(cfg);
  if (kind == Kind::kEscape && cfg.sigma2 && *cfg.sigma2 == 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "escape diagnostics need sigma2 > 0");
  }
  ExperimentReport report;
  for (int N : cfg.N_list) {
    const Setup st = make_setup(cfg, kind, N);
    const auto results = run_trials(kind, st, cfg);
    int failures = 0;
    int pole = 0;
    int separation = 0;
    for (const auto& r : results) {
      if (!r.failure) continue;
      ++failures;
      pole += *r.failure == ErrorCode::kPoleTooClose;
      separation += *r.failure == ErrorCode::kSeparationViolated;
    }
    auto row = [&](const std::string& metric, int source, double med, double q25, double q75) {
      report.rows.push_back({name_of(kind), N, st.M, st.K, cfg.trials, metric, source, med, q25, q75,
                             failures, cfg.base_seed});
    };
    const auto slots = metric_slots(kind, st.K);
    for (std::size_t s = 0; s < slots.size(); ++s) {
      std::vector<double> vals;
      for (const auto& r : results) {
        if (!r.failure) vals.push_back(r.values[s]);
      }
      if (slots[s].is_count) {
        double count = 0.0;
        for (double v : vals) count += v;
        row(slots[s].name, slots[s].source_index, count, count, count);
      } else {
        std::sort(vals.begin(), vals.end());
        row(slots[s].name, slots[s].source_index, quantile(vals, 0.5), quantile(vals, 0.25),
            quantile(vals, 0.75));
      }
    }
    if (kind == Kind::kConsistency) {
      const double G = static_cast<double>(st.grid.size());
      row("grid_size", -1, G, G, G);
    }
    row("pole_too_close_count", -1, pole, pole, pole);
    row("separation_violated_count", -1, separation, separation, separation);
    const double other = failures - pole - separation;
    row("other_failure_count", -1, other, other, other);
  }
  return report;
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json row_to_json(const ReportRow& r) {
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  return json{{"experiment", r.experiment},
              {"N", r.N},
              {"M", r.M},
              {"K", r.K},
              {"trial_count", r.trial_count},
              {"metric", r.metric},
              {"source_index", r.source_index},
              {"median", num(r.median)},
              {"q25", num(r.q25)},
              {"q75", num(r.q75)},
              {"failures", r.failures},
              {"seed", r.seed}};
}

[[noreturn]] void schema_error(const std::string& pointer, const std::string& what) {
  throw Error(ErrorCode::kParseError, pointer + ": " + what);
}

double get_number(const json& j, const std::string& pointer) {
  if (!j.is_number()) schema_error(pointer, "expected a number");
  return j.get<double>();
}

int get_int(const json& j, const std::string& pointer) {
  if (!j.is_number_integer()) schema_error(pointer, "expected an integer");
  const auto v = j.get<long long>();
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    schema_error(pointer, "integer out of range");
  }
  return static_cast<int>(v);
}

std::uint64_t get_u64(const json& j, const std::string& pointer) {
  if (!j.is_number_unsigned()) schema_error(pointer, "expected a non-negative integer");
  return j.get<std::uint64_t>();
}

std::vector<double> get_number_list(const json& j, const std::string& pointer) {
  if (!j.is_array()) schema_error(pointer, "expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(get_number(j[i], pointer + "/" + std::to_string(i)));
  return out;
}

}  // namespace

void validate(const ExperimentConfig& cfg) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvalidArgument, what); };
  if (!(cfg.c > 0.0 && cfg.c < 1.0)) fail("c must lie in (0, 1)");
  if (cfg.angles.size() != cfg.powers.size()) fail("one power per angle required");
  if (cfg.N_list.empty()) fail("N_list is empty");
  for (std::size_t i = 0; i < cfg.N_list.size(); ++i) {
    if (cfg.N_list[i] < 2) fail("N must be at least 2");
    if (i > 0 && cfg.N_list[i] <= cfg.N_list[i - 1]) fail("N_list must be strictly ascending");
  }
  if (cfg.trials < 1) fail("trials must be positive");
  if (cfg.sigma2 && !(*cfg.sigma2 >= 0.0)) fail("sigma2 must be non-negative");
  if (!cfg.sigma2 && cfg.angles.empty()) fail("sigma2 is required without sources");
  if (!cfg.sigma2 && !(cfg.threshold_factor > 0.0)) fail("threshold_factor must be positive");
  if (cfg.grid_size < 0 || cfg.grid_cap < 1) fail("invalid grid size");
  if (cfg.interval_half_width < 0.0) fail("interval_half_width must be non-negative");
  if (!(cfg.contour_signal_scale > 0.0)) fail("contour_signal_scale must be positive");
  if (!(cfg.tol > 0.0)) fail("tol must be positive");
  if (cfg.threads < 1) fail("threads must be positive");
}

double ExperimentReport::median(const std::string& metric, int N, int source_index) const {
  for (const auto& r : rows) {
    if (r.metric == metric && r.N == N && r.source_index == source_index) return r.median;
  }
  return kNaN;
}

ExperimentReport run_uniform_consistency(const ExperimentConfig& cfg) {
  return run(Kind::kConsistency, cfg);
}

ExperimentReport run_doa_consistency(const ExperimentConfig& cfg) { return run(Kind::kDoa, cfg); }

ExperimentReport run_escape_diagnostics(const ExperimentConfig& cfg) {
  return run(Kind::kEscape, cfg);
}

std::string format_report(const ExperimentReport& report, ReportFormat format) {
  if (format == ReportFormat::kJson) {
    json arr = json::array();
    for (const auto& r : report.rows) arr.push_back(row_to_json(r));
    return arr.dump(2) + "\n";
  }
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : report.rows) {
    out += r.experiment + "," + std::to_string(r.N) + "," + std::to_string(r.M) + "," +
           std::to_string(r.K) + "," + std::to_string(r.trial_count) + "," + r.metric + "," +
           std::to_string(r.source_index) + "," + format_number(r.median) + "," +
           format_number(r.q25) + "," + format_number(r.q75) + "," + std::to_string(r.failures) +
           "," + std::to_string(r.seed) + "\n";
  }
  return out;
}

void emit_report(const ExperimentReport& report, ReportFormat format, const std::string& path) {
  const std::string text = format_report(report, format);
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    if (!std::cout) throw Error(ErrorCode::kIoError, "cannot write to standard output");
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIoError, "cannot open " + path + " for writing");
  f << text;
  f.close();
  if (!f) throw Error(ErrorCode::kIoError, "failed writing " + path);
}

ExperimentReport parse_json_report(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
  if (!doc.is_array()) schema_error("", "expected an array of rows");
  ExperimentReport report;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& j = doc[i];
    const std::string p = "/" + std::to_string(i);
    if (!j.is_object()) schema_error(p, "expected an object");
    auto field = [&](const char* key) -> const json& {
      if (!j.contains(key)) schema_error(p + "/" + key, "missing");
      return j.at(key);
    };
    auto num = [&](const char* key) {
      const json& v = field(key);
      return v.is_null() ? kNaN : get_number(v, p + "/" + key);
    };
    ReportRow r;
    r.experiment = field("experiment").get<std::string>();
    r.N = get_int(field("N"), p + "/N");
    r.M = get_int(field("M"), p + "/M");
    r.K = get_int(field("K"), p + "/K");
    r.trial_count = get_int(field("trial_count"), p + "/trial_count");
    r.metric = field("metric").get<std::string>();
    r.source_index = get_int(field("source_index"), p + "/source_index");
    r.median = num("median");
    r.q25 = num("q25");
    r.q75 = num("q75");
    r.failures = get_int(field("failures"), p + "/failures");
    r.seed = get_u64(field("seed"), p + "/seed");
    report.rows.push_back(r);
  }
  return report;
}

ExperimentConfig config_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
  if (!doc.is_object()) schema_error("", "expected an object");
  ExperimentConfig cfg;
  for (const auto& [key, v] : doc.items()) {
    const std::string p = "/" + key;
    if (key == "c") {
      cfg.c = get_number(v, p);
    } else if (key == "angles") {
      cfg.angles = get_number_list(v, p);
    } else if (key == "powers") {
      cfg.powers = get_number_list(v, p);
    } else if (key == "sigma2") {
      if (v.is_null()) {
        cfg.sigma2.reset();
      } else {
        cfg.sigma2 = get_number(v, p);
      }
    } else if (key == "threshold_factor") {
      cfg.threshold_factor = get_number(v, p);
    } else if (key == "N_list") {
      if (!v.is_array()) schema_error(p, "expected an array");
      cfg.N_list.clear();
      for (std::size_t i = 0; i < v.size(); ++i) cfg.N_list.push_back(get_int(v[i], p + "/" + std::to_string(i)));
    } else if (key == "trials") {
      cfg.trials = get_int(v, p);
    } else if (key == "base_seed") {
      cfg.base_seed = get_u64(v, p);
    } else if (key == "scenario_seed") {
      cfg.scenario_seed = get_u64(v, p);
    } else if (key == "source_model") {
      if (v == "random_phase") {
        cfg.source_model = model::SourceModel::kRandomPhase;
      } else if (v == "exact_eigenvalues") {
        cfg.source_model = model::SourceModel::kExactEigenvalues;
      } else {
        schema_error(p, "expected \"random_phase\" or \"exact_eigenvalues\"");
      }
    } else if (key == "grid_size") {
      cfg.grid_size = get_int(v, p);
    } else if (key == "grid_cap") {
      cfg.grid_cap = get_int(v, p);
    } else if (key == "method") {
      if (v == "residue") {
        cfg.method = estimator::WeightMethod::kResidue;
      } else if (v == "quadrature") {
        cfg.method = estimator::WeightMethod::kQuadrature;
      } else {
        schema_error(p, "expected \"residue\" or \"quadrature\"");
      }
    } else if (key == "interval_half_width") {
      cfg.interval_half_width = get_number(v, p);
    } else if (key == "contour_signal_scale") {
      cfg.contour_signal_scale = get_number(v, p);
    } else if (key == "tol") {
      cfg.tol = get_number(v, p);
    } else if (key == "threads") {
      cfg.threads = get_int(v, p);
    } else {
      schema_error(p, "unknown field");
    }
  }
  try {
    validate(cfg);
  } catch (const Error& e) {
    throw Error(ErrorCode::kParseError, std::string("invalid config: ") + e.what());
  }
  return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j{{"c", cfg.c},
         {"angles", cfg.angles},
         {"powers", cfg.powers},
         {"sigma2", cfg.sigma2 ? json(*cfg.sigma2) : json(nullptr)},
         {"threshold_factor", cfg.threshold_factor},
         {"N_list", cfg.N_list},
         {"trials", cfg.trials},
         {"base_seed", cfg.base_seed},
         {"scenario_seed", cfg.scenario_seed},
         {"source_model", cfg.source_model == model::SourceModel::kRandomPhase ? "random_phase"
                                                                                : "exact_eigenvalues"},
         {"grid_size", cfg.grid_size},
         {"grid_cap", cfg.grid_cap},
         {"method", cfg.method == estimator::WeightMethod::kResidue ? "residue" : "quadrature"},
         {"interval_half_width", cfg.interval_half_width},
         {"contour_signal_scale", cfg.contour_signal_scale},
         {"tol", cfg.tol},
         {"threads", cfg.threads}};
  return j.dump(2) + "\n";
}

}  // namespace gmusic::experiments
