#pragma once

#include "morseflow/heat_flow.hpp"
#include "morseflow/morse.hpp"
#include "morseflow/oracle.hpp"
#include "morseflow/serialization.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace morseflow::experiment {

enum ExitCode : int {
  kOk = 0,
  kInternalError = 1,
  kParseError = 2,  // unreadable or invalid config/input file
  kNotInS = 3,      // first-eigenspace projection is not a stable minimal Morse function
  kFailed = 4,      // closed form and oracle disagree, or a basis check failed
  kNotReached = 5,  // no stabilization time on the grid
};

inline constexpr const char* kSchema = "morseflow/1";

struct GridSpec {
  std::string kind = "geometric";  // or "linear"
  double start = 1e-3;
  double stop = 10.0;
  int count = 64;

  std::vector<double> build() const;
};

struct InitialCondition {
  std::string source = "random";  // random | matrix | expansion | samples
  double decay = 0.5;
  std::string path;
  /// When set, h_1 is moved with perturb_to_distinct until its eigenvalue gaps exceed this.
  std::optional<double> h1_min_margin;
};

struct ExperimentConfig {
  std::optional<Space> space;
  std::uint64_t seed = 0;
  int levels = 4;
  InitialCondition initial;
  GridSpec grid;
  OracleConfig oracle;
  std::optional<double> gap_tol;
  SupNormOptions sup_norm;
  std::string matrix_path;
  int basis_level = 1;
};

/// Validates against the morseflow/1 schema; unknown keys are errors.
/// Relative paths are resolved against base_dir. Throws ParseError.
ExperimentConfig parse_config(const Json& j, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);
/// Sets the experiment seed and re-derives the per-module streams.
void set_seed(ExperimentConfig& c, std::uint64_t seed);
Json config_to_json(const ExperimentConfig& c);

/// Level j coefficients iid N(0, 1) * decay^j for j = 0..levels.
EigenExpansion random_expansion(const Space& space, int levels, double decay, std::uint64_t seed);

/// f_0 from the config, with h_1 conditioned when h1_min_margin is set and h_1 != 0.
EigenExpansion build_initial_condition(const ExperimentConfig& c);

struct Agreement {
  bool agree = true;
  double max_location_error = 0.0;
  double max_value_error = 0.0;
  std::vector<std::string> mismatches;
};

/// Flag-by-flag and point-by-point comparison. Locations are matched by
/// projective distance; values and Morse indices must match the nearest point.
Agreement compare_verdicts(const MorseReport& closed, const NumericVerdict& numeric, double location_tol = 1e-6,
                           double value_tol = 1e-8);

struct CommandResult {
  int exit_code = kOk;
  Json report;
  std::string csv;
  std::string summary;
};

CommandResult cmd_analyze_matrix(const CoefficientMatrix& a, const Space& space, const ExperimentConfig& c);
CommandResult cmd_stabilize(const ExperimentConfig& c);
CommandResult cmd_verify_basis(const Space& space, int j);

/// Dimension of degree-2j harmonic polynomials that descend to the space,
/// from the binomial count of homogeneous polynomials.
long long harmonic_dimension_formula(const Space& space, int j);

}  // namespace morseflow::experiment
