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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "gmusic/cli.hpp"
#include "gmusic/random.hpp"

using namespace gmusic;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "gmusic");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch() {
  const auto dir = fs::temp_directory_path() / "gmusic_cli_test";
  fs::create_directories(dir);
  return dir;
}

std::string write_file(const std::string& name, const std::string& text) {
  const auto path = scratch() / name;
  std::ofstream(path) << text;
  return path.string();
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("exit codes are distinct") {
  std::set<int> codes;
  for (int i = 0; i <= static_cast<int>(ErrorCode::kTooFewMinima); ++i) {
    codes.insert(cli::exit_code(static_cast<ErrorCode>(i)));
  }
  CHECK(codes.size() == 13);
  CHECK(codes.count(0) == 0);
  CHECK(cli::exit_code(ErrorCode::kSeparationViolated) == 4);
  CHECK(cli::exit_code(ErrorCode::kIoError) == 13);
}

TEST_CASE("support on a noise-only spectrum gives the Marchenko-Pastur edges") {
  const auto eigs = write_file("zeros.txt", "# noise only\n0\n0\n\n0\n0\n");
  const auto r = run_cli({"support", "--eigs", eigs, "--sigma2", "1", "--c", "0.25"});
  REQUIRE(r.code == 0);
  const auto doc = json::parse(r.out);
  CHECK(doc["Q"] == 1);
  CHECK(doc["clusters"][0]["x_minus"].get<double>() == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(doc["clusters"][0]["x_plus"].get<double>() == doctest::Approx(2.25).epsilon(1e-10));
}

TEST_CASE("support on a separated spectrum") {
  std::string text;
  for (int i = 0; i < 18; ++i) text += "0\n";
  text += "6\n6\n";
  const auto eigs = write_file("two.txt", text);
  const auto r = run_cli({"support", "--eigs", eigs, "--sigma2", "1", "--c", "0.5"});
  REQUIRE(r.code == 0);
  const auto doc = json::parse(r.out);
  CHECK(doc["Q"] == 2);
  CHECK(doc["separation"]["a5"] == true);
  CHECK(doc["separation"]["a6"] == true);
  CHECK(doc["contour"].is_object());

  const auto csv = run_cli({"support", "--eigs", eigs, "--sigma2", "1", "--c", "0.5", "--format", "csv"});
  CHECK(csv.code == 0);
  CHECK(csv.out.rfind("key,value\n", 0) == 0);
  CHECK(csv.out.find("separation.a5,true\n") != std::string::npos);
}

TEST_CASE("support reports verdicts before a separation failure") {
  std::string text;
  for (int i = 0; i < 18; ++i) text += "0\n";
  text += "0.3\n8\n";
  const auto eigs = write_file("weak.txt", text);
  const auto r = run_cli({"support", "--eigs", eigs, "--sigma2", "1", "--c", "0.5"});
  CHECK(r.code == 4);
  const auto doc = json::parse(r.out);
  CHECK(doc["separation"]["a5"] == false);
  CHECK(doc["contour"].is_null());
  CHECK(r.err.find("SeparationViolated") != std::string::npos);
}

TEST_CASE("malformed eigenvalue file names the line") {
  const auto eigs = write_file("bad.txt", "0\n0\n1.5x\n");
  const auto r = run_cli({"support", "--eigs", eigs, "--sigma2", "1", "--c", "0.5"});
  CHECK(r.code == 2);
  CHECK(r.err.find("bad.txt:3") != std::string::npos);
  CHECK(run_cli({"support", "--eigs", (scratch() / "missing.txt").string(), "--sigma2", "1", "--c",
                 "0.5"}).code == 13);
}

TEST_CASE("argument errors") {
  CHECK(run_cli({}).code == 1);
  CHECK(run_cli({"support", "--bogus"}).code == 1);
  CHECK(run_cli({"--format", "xml", "support"}).code == 1);
  CHECK(run_cli({"--help"}).code == 0);
}

TEST_CASE("complex matrix files round trip bit-exactly") {
  NormalStream rng(5);
  CMatrix X(3, 4);
  for (Eigen::Index i = 0; i < X.size(); ++i) {
    const auto [a, b] = rng.normal_pair();
    X(i) = {a * 1e-7, -b * 1e5};
  }
  X(0, 0) = {-0.0, 0.0};
  std::stringstream ss;
  cli::write_complex_matrix(ss, X);
  const CMatrix Y = cli::read_complex_matrix(ss, "mem");
  for (Eigen::Index i = 0; i < X.size(); ++i) {
    CHECK(X(i).real() == Y(i).real());
    CHECK(X(i).imag() == Y(i).imag());
  }
  CHECK(std::signbit(Y(0, 0).real()));
}

TEST_CASE("malformed matrix files") {
  auto error_of = [](const std::string& text) {
    std::istringstream in(text);
    try {
      cli::read_complex_matrix(in, "m");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kParseError);
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(error_of("1+2i\n").find("m:1") != std::string::npos);
  CHECK(error_of("# complex 1 2\n1+2i\n").find("m:2") != std::string::npos);
  CHECK(error_of("# complex 1 1\n1+2\n").find("m:2") != std::string::npos);
  CHECK(error_of("# complex 2 1\n1+2i\n").find("expected 2 rows") != std::string::npos);
  CHECK(error_of("# complex 1 1\n1+2i\n3+4i\n").find("m:3") != std::string::npos);
  CHECK(error_of("# complex 1 1\nnan+0i\n").find("non-finite") != std::string::npos);
}

TEST_CASE("noiseless estimate recovers the construction angles") {
  const auto x = (scratch() / "clean.txt").string();
  const auto sim = run_cli({"simulate", "--M", "40", "--N", "80", "--angles", "0.2,0.5", "--powers",
                            "1,1", "--sigma2", "0", "--out", x});
  REQUIRE(sim.code == 0);
  const auto truth = json::parse(slurp(x + ".truth.json"));
  CHECK(truth["K"] == 2);

  const auto r = run_cli({"estimate", "--input", x, "--K", "2", "--sigma2", "0", "--tol", "1e-12"});
  REQUIRE(r.code == 0);
  const auto doc = json::parse(r.out);
  CHECK(doc["weight_method"] == "classical");
  CHECK(std::abs(doc["improved"]["estimates"][0].get<double>() - 0.2) < 1e-6);
  CHECK(std::abs(doc["improved"]["estimates"][1].get<double>() - 0.5) < 1e-6);

  const auto iv = run_cli({"estimate", "--input", x, "--K", "2", "--sigma2", "0", "--intervals",
                           "0.05:0.35,0.35:0.65"});
  REQUIRE(iv.code == 0);
  CHECK(std::abs(json::parse(iv.out)["improved"]["estimates"][1].get<double>() - 0.5) < 1e-6);
}

TEST_CASE("noisy estimate with plug-in contour is deterministic") {
  const auto x = (scratch() / "noisy.txt").string();
  REQUIRE(run_cli({"simulate", "--M", "40", "--N", "80", "--angles", "0.2,0.5", "--powers", "1,1",
                   "--sigma2", "0.1", "--seed", "9", "--out", x}).code == 0);
  const auto spectrum = (scratch() / "spectrum.csv").string();
  const std::vector<std::string> args{"estimate", "--input", x, "--K", "2", "--sigma2", "0.1",
                                      "--spectrum", spectrum};
  const auto a = run_cli(args);
  REQUIRE(a.code == 0);
  const std::string spectrum_a = slurp(spectrum);
  const auto b = run_cli(args);
  CHECK(a.out == b.out);
  CHECK(spectrum_a == slurp(spectrum));
  CHECK(spectrum_a.rfind("theta,eta_classical,eta_improved\n", 0) == 0);

  const auto doc = json::parse(a.out);
  CHECK(doc["contour_source"] == "plug-in");
  CHECK(std::abs(doc["improved"]["estimates"][0].get<double>() - 0.2) < 0.05);
  CHECK(std::abs(doc["improved"]["estimates"][1].get<double>() - 0.5) < 0.05);

  const auto user = run_cli({"estimate", "--input", x, "--K", "2", "--sigma2", "0.1", "--contour",
                             "0.01,0.4,0.6,3", "--method", "quadrature"});
  CHECK(user.code == 0);
  CHECK(json::parse(user.out)["contour_source"] == "user");
  CHECK(run_cli({"estimate", "--input", x, "--K", "2", "--estimate-sigma2"}).code == 0);
  CHECK(run_cli({"estimate", "--input", x, "--K", "2"}).code == 1);
  CHECK(run_cli({"estimate", "--input", x, "--K", "2", "--sigma2", "0.1", "--contour", "1,0.5,2,3"})
            .code == 1);
}

TEST_CASE("topk with more sources than minima") {
  const auto x = (scratch() / "one.txt").string();
  REQUIRE(run_cli({"simulate", "--M", "6", "--N", "12", "--angles", "0.3", "--powers", "1",
                   "--sigma2", "0", "--out", x}).code == 0);
  const auto r = run_cli({"estimate", "--input", x, "--K", "5", "--sigma2", "0", "--topk"});
  CHECK(r.code == 12);
  CHECK(r.err.find("extraction") != std::string::npos);
}

TEST_CASE("experiment commands") {
  const auto cfg = write_file("mc.json", R"({"N_list": [20], "trials": 1, "grid_cap": 100})");
  const auto a = run_cli({"mc-consistency", "--config", cfg});
  REQUIRE(a.code == 0);
  CHECK(a.out.rfind("experiment,N,M,K", 0) == 0);
  CHECK(a.out.find("uniform_consistency,20,10,2,1,sup_err_improved") != std::string::npos);
  CHECK(run_cli({"mc-consistency", "--config", cfg}).out == a.out);

  const auto other = run_cli({"mc-consistency", "--config", cfg, "--seed", "7"});
  CHECK(other.out != a.out);
  CHECK(other.out.find(",7\n") != std::string::npos);

  const auto js = run_cli({"--format", "json", "mc-escape", "--config", cfg});
  REQUIRE(js.code == 0);
  CHECK(json::parse(js.out).is_array());

  const auto bad = write_file("bad.json", R"({"N_list": [20, "x"]})");
  const auto r = run_cli({"mc-doa", "--config", bad});
  CHECK(r.code == 2);
  CHECK(r.err.find("/N_list/1") != std::string::npos);
}
