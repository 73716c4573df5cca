#pragma once

#include "morseflow/heat_flow.hpp"
#include "morseflow/morse.hpp"
#include "morseflow/oracle.hpp"
#include "morseflow/polynomial.hpp"
#include "morseflow/space.hpp"

#include <json.hpp>

#include <stdexcept>
#include <string>
#include <string_view>

// JSON and CSV forms of the library types. Readers throw ParseError on any
// malformed or inconsistent input.
namespace morseflow {

using Json = nlohmann::json;

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// "RP2", "CP1", ...
Space parse_space(std::string_view name);
Json space_to_json(const Space& space);
Space space_from_json(const Json& j);

/// {"symmetry": "symmetric"|"hermitian", "size": h, "re": [...], "im": [...]}, row-major.
Json matrix_to_json(const CoefficientMatrix& a);
CoefficientMatrix matrix_from_json(const Json& j);

/// {"variables": [...], "terms": [{"exponents": [...], "coeff": c}, ...]}
Json polynomial_to_json(const Polynomial& p);
Polynomial polynomial_from_json(const Json& j);

/// {"space": ..., "levels": [{"level": j, "coefficients": [...]}, ...]}
Json expansion_to_json(const EigenExpansion& f);
EigenExpansion expansion_from_json(const Json& j);

struct SampleSet {
  Space space = Space::real(1);
  Eigen::MatrixXd points;  // columns on the unit sphere
  Eigen::VectorXd values;
};

/// {"space": ..., "samples": [{"point": [...], "value": v}, ...]}
Json samples_to_json(const SampleSet& s);
SampleSet samples_from_json(const Json& j);

Json morse_report_to_json(const MorseReport& r);
Json numeric_verdict_to_json(const NumericVerdict& v);
Json grid_verdict_to_json(const GridVerdict& g);
Json decay_fit_to_json(const DecayFit& fit);

/// Reads a whole file as JSON; I/O and syntax errors become ParseError.
Json read_json_file(const std::string& path);

/// %.17g; non-finite values print as nan/inf.
std::string format_double(double x);

inline constexpr std::string_view kSeriesCsvHeader = "t,deviation_sup,is_morse,is_minimal,distinct_values,is_stable,margin";

/// One row per grid point under kSeriesCsvHeader.
std::string scan_to_csv(const StabilizationScan& scan);

}  // namespace morseflow
