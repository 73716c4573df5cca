#include "morseflow/experiment.hpp"
#include "support.hpp"

#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace morseflow;
namespace mx = morseflow::experiment;
namespace fs = std::filesystem;
namespace ts = testing_support;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("morseflow_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write(const fs::path& p, const std::string& body) {
  std::ofstream f(p, std::ios::binary);
  f << body;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + MORSEFLOW_CLI + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kSmallStabilize = R"({
  "schema": "morseflow/1",
  "space": "RP2",
  "seed": 7,
  "levels": 3,
  "initial_condition": {"source": "random", "decay": 0.5, "h1_min_margin": 0.1},
  "grid": {"kind": "geometric", "start": 0.01, "stop": 2.0, "count": 8},
  "tolerances": {"sup_norm_points_per_dim": 512}
})";

}  // namespace

TEST_SUITE("experiment-cli") {

TEST_CASE("config parsing") {
  const auto c = mx::parse_config(Json::parse(kSmallStabilize));
  REQUIRE(c.space);
  CHECK(*c.space == Space::real(2));
  CHECK(c.seed == 7);
  CHECK(c.grid.count == 8);
  CHECK(c.sup_norm.points_per_dim == 512);
  CHECK(c.initial.h1_min_margin == doctest::Approx(0.1));

  const auto again = mx::parse_config(mx::config_to_json(c));
  CHECK(mx::config_to_json(again) == mx::config_to_json(c));

  CHECK(mx::parse_config(Json::parse(R"({"schema": "morseflow/1", "space": {"kind": "complex", "n": 2}})")).space ==
        Space::complex(2));
}

TEST_CASE("config errors") {
  auto bad = [](const char* text) { return mx::parse_config(Json::parse(text)); };
  CHECK_THROWS_AS(bad(R"({"schema": "morseflow/2"})"), ParseError);
  CHECK_THROWS_AS(bad(R"({"space": "RP2"})"), ParseError);
  CHECK_THROWS_AS(bad(R"({"schema": "morseflow/1", "colour": 1})"), ParseError);
  CHECK_THROWS_AS(bad(R"({"schema": "morseflow/1", "grid": {"count": 8, "step": 1}})"), ParseError);
  CHECK_THROWS_AS(bad(R"({"schema": "morseflow/1", "tolerances": {"newton_tol": -1}})"), ParseError);
  CHECK_THROWS_AS(bad(R"({"schema": "morseflow/1", "seed": -3})"), ParseError);
  CHECK_THROWS_AS(bad(R"({"schema": "morseflow/1", "space": "XP2"})"), ParseError);
  CHECK_THROWS_AS(bad(R"({"schema": "morseflow/1", "initial_condition": {"source": "matrix"}})"), ParseError);
  CHECK_THROWS_AS(bad(R"({"schema": "morseflow/1", "grid": {"start": 2, "stop": 1}})"), ParseError);
}

TEST_CASE("seed streams are derived from the experiment seed") {
  auto c = mx::parse_config(Json::parse(kSmallStabilize));
  const auto oracle_seed = c.oracle.seed;
  mx::set_seed(c, 8);
  CHECK(c.seed == 8);
  CHECK(c.oracle.seed != oracle_seed);
  CHECK(c.oracle.seed != c.sup_norm.seed);
}

TEST_CASE("initial condition conditioning keeps h1 in S") {
  auto c = mx::parse_config(Json::parse(kSmallStabilize));
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    mx::set_seed(c, seed);
    const auto f = mx::build_initial_condition(c);
    CHECK(stability_margin(first_level_matrix(f)) > 0.1);
  }
}

TEST_CASE("harmonic dimension formula") {
  for (const Space s : {Space::real(1), Space::real(2), Space::real(3), Space::complex(1), Space::complex(2)})
    for (int j = 1; j <= 4; ++j) CHECK(mx::harmonic_dimension_formula(s, j) == ts::expected_dimension(s, j));
}

TEST_CASE("verify-basis passes on the reference spaces") {
  for (const Space s : {Space::real(2), Space::complex(1)})
    for (int j = 1; j <= 2; ++j) {
      const auto r = mx::cmd_verify_basis(s, j);
      CHECK(r.exit_code == mx::kOk);
      CHECK(r.csv.rfind("element,primitive_norm,terms\n", 0) == 0);
    }
}

TEST_CASE("analyze-matrix: agreement and exit codes") {
  const mx::ExperimentConfig c;
  Eigen::MatrixXd d = Eigen::Vector3d(-1, 0, 1).asDiagonal();
  const auto ok = mx::cmd_analyze_matrix(CoefficientMatrix::symmetric(d), Space::real(2), c);
  CHECK(ok.exit_code == mx::kOk);
  CHECK(ok.report["closed_form"]["is_stable"] == true);
  CHECK(ok.report["numeric"]["is_stable"] == true);
  d = Eigen::Vector3d(1, 1, -2).asDiagonal();
  const auto degenerate = mx::cmd_analyze_matrix(CoefficientMatrix::symmetric(d), Space::real(2), c);
  CHECK(degenerate.exit_code == mx::kOk);
  CHECK(degenerate.report["numeric"]["degenerate_cluster_detected"] == true);
}

TEST_CASE("CLI exit codes") {
  const fs::path dir = scratch("exit");
  write(dir / "garbage.json", "{ not json");
  CHECK(run_cli("stabilize --config " + (dir / "garbage.json").string()) == mx::kParseError);
  CHECK(run_cli("analyze-matrix --matrix " + (dir / "missing.json").string()) == mx::kParseError);
  CHECK(run_cli("stabilize --bogus-flag") == mx::kParseError);

  write(dir / "flat.json", R"({"symmetry": "symmetric", "size": 3, "re": [1,0,0, 0,1,0, 0,0,-2]})");
  write(dir / "flat_config.json", R"({"schema": "morseflow/1", "space": "RP2",
    "initial_condition": {"source": "matrix", "path": "flat.json"}})");
  CHECK(run_cli("stabilize --config " + (dir / "flat_config.json").string()) == mx::kNotInS);

  write(dir / "good.json", R"({"symmetry": "symmetric", "size": 3, "re": [-1,0,0, 0,0,0, 0,0,1]})");
  CHECK(run_cli("analyze-matrix --matrix " + (dir / "good.json").string()) == mx::kOk);
  CHECK(run_cli("verify-basis --space CP1 --level 2") == mx::kOk);
}

TEST_CASE("stabilize: same seed gives byte-identical output") {
  const fs::path dir = scratch("repro");
  write(dir / "config.json", kSmallStabilize);
  const std::string cfg = (dir / "config.json").string();
  REQUIRE(run_cli("stabilize --config " + cfg + " --format csv --out " + (dir / "a").string()) == mx::kOk);
  REQUIRE(run_cli("stabilize --config " + cfg + " --format csv --out " + (dir / "b").string()) == mx::kOk);
  const std::string a = slurp(dir / "a" / "series.csv"), b = slurp(dir / "b" / "series.csv");
  CHECK(a == b);
  CHECK(a.rfind(std::string(kSeriesCsvHeader) + "\n", 0) == 0);
  CHECK(std::count(a.begin(), a.end(), '\n') == 9);

  REQUIRE(run_cli("stabilize --config " + cfg + " --out " + (dir / "j").string()) == mx::kOk);
  const Json report = Json::parse(slurp(dir / "j" / "report.json"));
  CHECK(report["status"] == "reached");
  CHECK(report["grid"].size() == 8);
  CHECK(report["config"]["seed"] == 7);

  REQUIRE(run_cli("stabilize --config " + cfg + " --seed 8 --format csv --out " + (dir / "c").string()) == mx::kOk);
  CHECK(slurp(dir / "c" / "series.csv") != a);
}

}
