#include "morseflow/serialization.hpp"

#include "morseflow/spectra.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace morseflow {

namespace {

Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json vector_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v(i)));
  return a;
}

Eigen::VectorXd vector_from(const Json& j, const char* what) {
  if (!j.is_array()) throw ParseError(std::string(what) + ": expected an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError(std::string(what) + ": expected numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

const Json& field(const Json& j, const char* key) {
  if (!j.is_object()) throw ParseError(std::string("expected an object with field '") + key + "'");
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string("missing field '") + key + "'");
  return *it;
}

Json chart_point_json(const ChartPoint& p) {
  return {{"chart", p.chart}, {"coordinates", vector_json(p.coordinates)}, {"ambient", vector_json(p.ambient)}};
}

}  // namespace

Space parse_space(std::string_view name) {
  if (name.size() < 3 || (name.substr(0, 2) != "RP" && name.substr(0, 2) != "CP"))
    throw ParseError("space must look like RP<n> or CP<n>");
  int n = 0;
  for (char c : name.substr(2)) {
    if (c < '0' || c > '9' || n > 1000) throw ParseError("bad space dimension in '" + std::string(name) + "'");
    n = 10 * n + (c - '0');
  }
  if (n < 1) throw ParseError("space dimension must be positive");
  return name[0] == 'R' ? Space::real(n) : Space::complex(n);
}

Json space_to_json(const Space& space) {
  return {{"kind", space.is_complex() ? "complex" : "real"}, {"n", space.n()}, {"name", space.name()}};
}

Space space_from_json(const Json& j) {
  if (j.is_string()) return parse_space(j.get<std::string>());
  const Json& kind = field(j, "kind");
  const Json& n = field(j, "n");
  if (!kind.is_string() || !n.is_number_integer()) throw ParseError("space: kind must be a string, n an integer");
  const int dim = n.get<int>();
  if (dim < 1) throw ParseError("space: n must be positive");
  if (kind == "real") return Space::real(dim);
  if (kind == "complex") return Space::complex(dim);
  throw ParseError("space: kind must be 'real' or 'complex'");
}

Json matrix_to_json(const CoefficientMatrix& a) {
  Json re = Json::array(), im = Json::array();
  for (int r = 0; r < a.size(); ++r)
    for (int c = 0; c < a.size(); ++c) {
      re.push_back(a.entries()(r, c).real());
      im.push_back(a.entries()(r, c).imag());
    }
  Json j = {{"symmetry", a.kind() == SymmetryKind::Symmetric ? "symmetric" : "hermitian"}, {"size", a.size()}, {"re", re}};
  if (a.kind() == SymmetryKind::Hermitian) j["im"] = im;
  return j;
}

CoefficientMatrix matrix_from_json(const Json& j) {
  const Json& sym = field(j, "symmetry");
  const Json& size = field(j, "size");
  if (!size.is_number_integer() || size.get<int>() < 2) throw ParseError("matrix: size must be an integer >= 2");
  const int h = size.get<int>();
  const Eigen::VectorXd re = vector_from(field(j, "re"), "matrix re");
  if (re.size() != h * h) throw ParseError("matrix: 're' must hold size*size entries");
  Eigen::VectorXd im = Eigen::VectorXd::Zero(h * h);
  if (j.contains("im")) {
    im = vector_from(j["im"], "matrix im");
    if (im.size() != h * h) throw ParseError("matrix: 'im' must hold size*size entries");
  }
  Eigen::MatrixXcd a(h, h);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < h; ++c) a(r, c) = {re(r * h + c), im(r * h + c)};
  try {
    if (sym == "symmetric") {
      if (im.cwiseAbs().maxCoeff() != 0.0) throw ParseError("matrix: symmetric matrices take no imaginary part");
      return CoefficientMatrix::symmetric(a.real());
    }
    if (sym == "hermitian") return CoefficientMatrix::hermitian(a);
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("matrix: ") + e.what());
  }
  throw ParseError("matrix: symmetry must be 'symmetric' or 'hermitian'");
}

Json polynomial_to_json(const Polynomial& p) {
  Json terms = Json::array();
  for (const auto& [m, c] : p.terms()) terms.push_back({{"exponents", m}, {"coeff", c}});
  return {{"variables", p.variables()}, {"terms", terms}};
}

Polynomial polynomial_from_json(const Json& j) {
  const Json& vars = field(j, "variables");
  if (!vars.is_array()) throw ParseError("polynomial: variables must be an array of names");
  std::vector<std::string> names;
  for (const auto& v : vars) {
    if (!v.is_string()) throw ParseError("polynomial: variable names must be strings");
    names.push_back(v.get<std::string>());
  }
  Polynomial p(names);
  const Json& terms = field(j, "terms");
  if (!terms.is_array()) throw ParseError("polynomial: terms must be an array");
  for (const auto& t : terms) {
    const Json& e = field(t, "exponents");
    const Json& c = field(t, "coeff");
    if (!e.is_array() || e.size() != names.size() || !c.is_number())
      throw ParseError("polynomial: each term needs one exponent per variable and a numeric coeff");
    Monomial m;
    for (const auto& x : e) {
      if (!x.is_number_integer() || x.get<int>() < 0) throw ParseError("polynomial: exponents must be non-negative integers");
      m.push_back(x.get<int>());
    }
    p.add_term(m, c.get<double>());
  }
  return p;
}

Json expansion_to_json(const EigenExpansion& f) {
  Json levels = Json::array();
  for (const auto& [j, c] : f.levels()) levels.push_back({{"level", j}, {"coefficients", vector_json(c)}});
  return {{"space", space_to_json(f.space())}, {"levels", levels}};
}

EigenExpansion expansion_from_json(const Json& j) {
  const Space space = space_from_json(field(j, "space"));
  const Json& levels = field(j, "levels");
  if (!levels.is_array()) throw ParseError("expansion: levels must be an array");
  std::map<int, Eigen::VectorXd> out;
  for (const auto& l : levels) {
    const Json& lv = field(l, "level");
    if (!lv.is_number_integer() || lv.get<int>() < 0) throw ParseError("expansion: level must be a non-negative integer");
    if (!out.emplace(lv.get<int>(), vector_from(field(l, "coefficients"), "expansion coefficients")).second)
      throw ParseError("expansion: duplicate level " + std::to_string(lv.get<int>()));
  }
  try {
    return {space, std::move(out)};
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("expansion: ") + e.what());
  }
}

Json samples_to_json(const SampleSet& s) {
  Json samples = Json::array();
  for (Eigen::Index i = 0; i < s.points.cols(); ++i)
    samples.push_back({{"point", vector_json(s.points.col(i))}, {"value", s.values(i)}});
  return {{"space", space_to_json(s.space)}, {"samples", samples}};
}

SampleSet samples_from_json(const Json& j) {
  SampleSet s;
  s.space = space_from_json(field(j, "space"));
  const Json& samples = field(j, "samples");
  if (!samples.is_array() || samples.empty()) throw ParseError("samples: expected a non-empty array");
  const int m = s.space.ambient_real_dim();
  s.points.resize(m, static_cast<Eigen::Index>(samples.size()));
  s.values.resize(static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Eigen::VectorXd p = vector_from(field(samples[i], "point"), "sample point");
    const Json& v = field(samples[i], "value");
    if (p.size() != m || !v.is_number()) throw ParseError("samples: point dimension or value type is wrong");
    s.points.col(static_cast<Eigen::Index>(i)) = p;
    s.values(static_cast<Eigen::Index>(i)) = v.get<double>();
  }
  return s;
}

Json morse_report_to_json(const MorseReport& r) {
  Json pts = Json::array();
  for (const auto& p : r.critical_points)
    pts.push_back({{"location", vector_json(p.location)},
                   {"value", number(p.value)},
                   {"chart", p.chart},
                   {"hessian_eigenvalues", vector_json(p.hessian_eigenvalues)},
                   {"morse_index", p.morse_index},
                   {"hessian_determinant", number(p.hessian_determinant)}});
  return {{"method", "closed_form"},
          {"space", space_to_json(r.space)},
          {"is_morse", r.is_morse},
          {"is_minimal", r.is_minimal},
          {"has_distinct_values", r.has_distinct_values},
          {"is_stable", r.is_stable},
          {"stability_margin", number(r.stability_margin)},
          {"gap_tol", number(r.gap_tol)},
          {"eigenvalues", vector_json(r.eigenvalues)},
          {"degenerate_levels", r.degenerate_levels},
          {"critical_points", pts}};
}

Json numeric_verdict_to_json(const NumericVerdict& v) {
  Json pts = Json::array();
  for (const auto& p : v.critical_points)
    pts.push_back({{"point", chart_point_json(p.point)},
                   {"value", number(p.value)},
                   {"hessian_eigenvalues", vector_json(p.hessian_eigenvalues)},
                   {"morse_index", p.morse_index},
                   {"hessian_determinant", number(p.hessian_determinant)},
                   {"fd_hessian_error", number(p.fd_hessian_error)},
                   {"residual", number(p.residual)},
                   {"hits", p.hits},
                   {"degenerate", p.degenerate}});
  const auto& c = v.config;
  return {{"method", "numeric"},
          {"space", space_to_json(v.space)},
          {"is_morse", v.is_morse},
          {"is_minimal", v.is_minimal},
          {"has_distinct_values", v.has_distinct_values},
          {"is_stable", v.is_stable},
          {"degenerate_cluster_detected", v.degenerate_cluster_detected},
          {"min_value_gap", number(v.min_value_gap)},
          {"starts", v.starts},
          {"converged", v.converged},
          {"diagnostic", v.diagnostic},
          {"tolerances",
           {{"newton_tol", c.newton_tol},
            {"max_iterations", c.max_iterations},
            {"dedup_radius", c.dedup_radius},
            {"hess_tol", c.hess_tol},
            {"value_tol", c.value_tol},
            {"fd_step", c.fd_step},
            {"function_scale", number(v.function_scale)},
            {"hess_threshold", number(v.hess_threshold)},
            {"value_threshold", number(v.value_threshold)}}},
          {"critical_points", pts}};
}

Json grid_verdict_to_json(const GridVerdict& g) {
  return {{"is_morse", g.is_morse},
          {"is_minimal", g.is_minimal},
          {"has_distinct_values", g.has_distinct_values},
          {"is_stable", g.is_stable},
          {"margin", number(g.margin)},
          {"critical_points", g.critical_points},
          {"diagnostic", g.diagnostic}};
}

Json decay_fit_to_json(const DecayFit& fit) {
  return {{"slope", number(fit.slope)},
          {"intercept", number(fit.intercept)},
          {"r_squared", number(fit.r_squared)},
          {"rms_residual", number(fit.rms_residual)},
          {"max_abs_residual", number(fit.max_abs_residual)},
          {"points", fit.points},
          {"t_min", number(fit.t_min)}};
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ParseError("'" + path + "': " + e.what());
  }
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string scan_to_csv(const StabilizationScan& scan) {
  std::ostringstream out;
  out << kSeriesCsvHeader << '\n';
  auto flag = [](bool b) { return b ? "1" : "0"; };
  for (std::size_t i = 0; i < scan.verdicts.size(); ++i) {
    const auto& v = scan.verdicts[i];
    out << format_double(scan.grid[i]) << ',' << format_double(scan.deviations[i]) << ',' << flag(v.is_morse) << ','
        << flag(v.is_minimal) << ',' << flag(v.has_distinct_values) << ',' << flag(v.is_stable) << ','
        << format_double(v.margin) << '\n';
  }
  return out.str();
}

}  // namespace morseflow
