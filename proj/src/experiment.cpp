#include "morseflow/experiment.hpp"

#include "morseflow/sampling.hpp"
#include "morseflow/spectra.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <set>
#include <sstream>

namespace morseflow::experiment {

namespace {

void check_keys(const Json& j, const char* where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ParseError(std::string(where) + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items())
    if (!ok.count(key)) throw ParseError(std::string(where) + ": unknown key '" + key + "'");
}

double positive(const Json& v, const std::string& what) {
  if (!v.is_number() || !(v.get<double>() > 0.0) || !std::isfinite(v.get<double>()))
    throw ParseError(what + " must be a positive number");
  return v.get<double>();
}

int positive_int(const Json& v, const std::string& what) {
  if (!v.is_number_integer() || v.get<long long>() < 1 || v.get<long long>() > std::numeric_limits<int>::max())
    throw ParseError(what + " must be a positive integer");
  return v.get<int>();
}

std::string path_field(const Json& v, const std::string& what, const std::string& base) {
  if (!v.is_string() || v.get<std::string>().empty()) throw ParseError(what + " must be a non-empty string");
  const std::filesystem::path p(v.get<std::string>());
  return p.is_absolute() ? p.string() : (std::filesystem::path(base) / p).lexically_normal().string();
}

long long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

Json series_json(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(std::isfinite(x) ? Json(x) : Json(nullptr));
  return a;
}

}  // namespace

std::vector<double> GridSpec::build() const {
  if (kind == "geometric") return geometric_grid(start, stop, count);
  if (kind == "linear") return linear_grid(start, stop, count);
  throw ParseError("grid kind must be 'geometric' or 'linear'");
}

ExperimentConfig parse_config(const Json& j, const std::string& base_dir) {
  check_keys(j, "config",
             {"schema", "space", "seed", "levels", "initial_condition", "grid", "tolerances", "matrix", "basis_level"});
  if (!j.contains("schema") || j["schema"] != kSchema) throw ParseError(std::string("config: schema must be '") + kSchema + "'");
  ExperimentConfig c;
  if (j.contains("space")) c.space = space_from_json(j["space"]);
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0))
      throw ParseError("seed must be a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("levels")) c.levels = positive_int(j["levels"], "levels");
  if (j.contains("basis_level")) c.basis_level = positive_int(j["basis_level"], "basis_level");
  if (j.contains("matrix")) c.matrix_path = path_field(j["matrix"], "matrix", base_dir);

  if (j.contains("initial_condition")) {
    const Json& ic = j["initial_condition"];
    check_keys(ic, "initial_condition", {"source", "decay", "path", "h1_min_margin"});
    if (ic.contains("source")) {
      if (!ic["source"].is_string()) throw ParseError("initial_condition.source must be a string");
      c.initial.source = ic["source"].get<std::string>();
    }
    if (c.initial.source != "random" && c.initial.source != "matrix" && c.initial.source != "expansion" &&
        c.initial.source != "samples")
      throw ParseError("initial_condition.source must be random, matrix, expansion or samples");
    if (ic.contains("decay")) c.initial.decay = positive(ic["decay"], "initial_condition.decay");
    if (ic.contains("path")) c.initial.path = path_field(ic["path"], "initial_condition.path", base_dir);
    if (ic.contains("h1_min_margin")) c.initial.h1_min_margin = positive(ic["h1_min_margin"], "initial_condition.h1_min_margin");
    if (c.initial.source != "random" && c.initial.path.empty())
      throw ParseError("initial_condition.path is required for source '" + c.initial.source + "'");
  }

  if (j.contains("grid")) {
    const Json& g = j["grid"];
    check_keys(g, "grid", {"kind", "start", "stop", "count"});
    if (g.contains("kind")) {
      if (!g["kind"].is_string()) throw ParseError("grid.kind must be a string");
      c.grid.kind = g["kind"].get<std::string>();
    }
    if (g.contains("start")) c.grid.start = positive(g["start"], "grid.start");
    if (g.contains("stop")) c.grid.stop = positive(g["stop"], "grid.stop");
    if (g.contains("count")) c.grid.count = positive_int(g["count"], "grid.count");
    if (!(c.grid.stop > c.grid.start) || c.grid.count < 2)
      throw ParseError("grid: need start < stop and count >= 2");
    if (c.grid.kind != "geometric" && c.grid.kind != "linear") throw ParseError("grid.kind must be geometric or linear");
  }

  if (j.contains("tolerances")) {
    const Json& t = j["tolerances"];
    check_keys(t, "tolerances",
               {"newton_tol", "max_iterations", "dedup_radius", "hess_tol", "value_tol", "fd_step", "multistart",
                "gap_tol", "sup_norm_points_per_dim", "sup_norm_refine_top"});
    if (t.contains("newton_tol")) c.oracle.newton_tol = positive(t["newton_tol"], "tolerances.newton_tol");
    if (t.contains("max_iterations")) c.oracle.max_iterations = positive_int(t["max_iterations"], "tolerances.max_iterations");
    if (t.contains("dedup_radius")) c.oracle.dedup_radius = positive(t["dedup_radius"], "tolerances.dedup_radius");
    if (t.contains("hess_tol")) c.oracle.hess_tol = positive(t["hess_tol"], "tolerances.hess_tol");
    if (t.contains("value_tol")) c.oracle.value_tol = positive(t["value_tol"], "tolerances.value_tol");
    if (t.contains("fd_step")) c.oracle.fd_step = positive(t["fd_step"], "tolerances.fd_step");
    if (t.contains("multistart")) c.oracle.starts = positive_int(t["multistart"], "tolerances.multistart");
    if (t.contains("gap_tol")) c.gap_tol = positive(t["gap_tol"], "tolerances.gap_tol");
    if (t.contains("sup_norm_points_per_dim"))
      c.sup_norm.points_per_dim = positive_int(t["sup_norm_points_per_dim"], "tolerances.sup_norm_points_per_dim");
    if (t.contains("sup_norm_refine_top"))
      c.sup_norm.refine_top = positive_int(t["sup_norm_refine_top"], "tolerances.sup_norm_refine_top");
  }
  set_seed(c, c.seed);
  return c;
}

void set_seed(ExperimentConfig& c, std::uint64_t seed) {
  c.seed = seed;
  c.oracle.seed = stream_seed(seed, "oracle");
  c.sup_norm.seed = stream_seed(seed, "sup_norm");
}

ExperimentConfig load_config(const std::string& path) {
  const auto base = std::filesystem::path(path).parent_path().string();
  return parse_config(read_json_file(path), base.empty() ? "." : base);
}

Json config_to_json(const ExperimentConfig& c) {
  Json j = {{"schema", kSchema}, {"seed", c.seed}, {"levels", c.levels}, {"basis_level", c.basis_level}};
  if (c.space) j["space"] = space_to_json(*c.space);
  Json ic = {{"source", c.initial.source}, {"decay", c.initial.decay}};
  if (!c.initial.path.empty()) ic["path"] = c.initial.path;
  if (c.initial.h1_min_margin) ic["h1_min_margin"] = *c.initial.h1_min_margin;
  j["initial_condition"] = ic;
  j["grid"] = {{"kind", c.grid.kind}, {"start", c.grid.start}, {"stop", c.grid.stop}, {"count", c.grid.count}};
  Json t = {{"newton_tol", c.oracle.newton_tol},
            {"max_iterations", c.oracle.max_iterations},
            {"dedup_radius", c.oracle.dedup_radius},
            {"hess_tol", c.oracle.hess_tol},
            {"value_tol", c.oracle.value_tol},
            {"fd_step", c.oracle.fd_step},
            {"sup_norm_points_per_dim", c.sup_norm.points_per_dim},
            {"sup_norm_refine_top", c.sup_norm.refine_top}};
  if (c.oracle.starts > 0) t["multistart"] = c.oracle.starts;
  else if (c.space) t["multistart"] = c.oracle.effective_starts(*c.space);
  if (c.gap_tol) t["gap_tol"] = *c.gap_tol;
  j["tolerances"] = t;
  if (!c.matrix_path.empty()) j["matrix"] = c.matrix_path;
  return j;
}

EigenExpansion random_expansion(const Space& space, int levels, double decay, std::uint64_t seed) {
  if (levels < 1) throw std::invalid_argument("random expansion needs at least one level");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::map<int, Eigen::VectorXd> out;
  for (int j = 0; j <= levels; ++j) {
    Eigen::VectorXd c(level_basis(space, j)->size());
    const double s = std::pow(decay, j);
    for (Eigen::Index k = 0; k < c.size(); ++k) c(k) = s * normal(rng);
    out.emplace(j, std::move(c));
  }
  return {space, std::move(out)};
}

EigenExpansion build_initial_condition(const ExperimentConfig& c) {
  if (!c.space) throw ParseError("config: space is required");
  const Space space = *c.space;
  const auto& ic = c.initial;
  EigenExpansion f(space, {});
  if (ic.source == "random") {
    f = random_expansion(space, c.levels, ic.decay, stream_seed(c.seed, "initial_condition"));
  } else if (ic.source == "matrix") {
    const CoefficientMatrix a = matrix_from_json(read_json_file(ic.path));
    if (a.size() != space.homogeneous_dim()) throw ParseError("matrix size does not match the space");
    try {
      f = with_first_level_matrix(EigenExpansion(space, {}), a);
    } catch (const std::invalid_argument& e) {
      throw ParseError(std::string("initial matrix: ") + e.what());
    }
  } else if (ic.source == "expansion") {
    f = expansion_from_json(read_json_file(ic.path));
    if (!(f.space() == space)) throw ParseError("expansion space does not match the config space");
  } else {
    const SampleSet s = samples_from_json(read_json_file(ic.path));
    if (!(s.space == space)) throw ParseError("sample space does not match the config space");
    try {
      f = expansion_from_samples(s.points, s.values, space, c.levels);
    } catch (const std::invalid_argument& e) {
      throw ParseError(std::string("samples: ") + e.what());
    }
  }
  if (ic.h1_min_margin) {
    const CoefficientMatrix a = first_level_matrix(f);
    if (a.operator_norm() > 0.0 && !(stability_margin(a) > *ic.h1_min_margin)) {
      // perturb_to_distinct guarantees gaps >= 2 eps / n.
      const double eps = 0.6 * space.n() * *ic.h1_min_margin;
      f = with_first_level_matrix(f, perturb_to_distinct(a, eps));
    }
  }
  return f;
}

Agreement compare_verdicts(const MorseReport& closed, const NumericVerdict& numeric, double location_tol,
                           double value_tol) {
  Agreement a;
  auto flag = [&](const char* name, bool x, bool y) {
    if (x != y) {
      a.agree = false;
      a.mismatches.push_back(std::string(name) + ": closed form " + (x ? "true" : "false") + ", numeric " +
                             (y ? "true" : "false"));
    }
  };
  flag("is_morse", closed.is_morse, numeric.is_morse);
  flag("is_minimal", closed.is_minimal, numeric.is_minimal);
  flag("has_distinct_values", closed.has_distinct_values, numeric.has_distinct_values);
  flag("is_stable", closed.is_stable, numeric.is_stable);
  if (!closed.is_morse) {
    flag("degenerate_cluster_detected", true, numeric.degenerate_cluster_detected);
    return a;
  }
  if (closed.critical_points.size() != numeric.critical_points.size()) {
    a.agree = false;
    a.mismatches.push_back("critical point count: closed form " + std::to_string(closed.critical_points.size()) +
                           ", numeric " + std::to_string(numeric.critical_points.size()));
    return a;
  }
  for (const auto& cp : closed.critical_points) {
    double best = std::numeric_limits<double>::infinity();
    const NumericCriticalPoint* match = nullptr;
    for (const auto& np : numeric.critical_points) {
      const double d = projective_distance(closed.space, cp.location, np.point.ambient);
      if (d < best) {
        best = d;
        match = &np;
      }
    }
    a.max_location_error = std::max(a.max_location_error, best);
    const double dv = std::abs(match->value - cp.value);
    a.max_value_error = std::max(a.max_value_error, dv);
    if (best > location_tol || dv > value_tol || match->morse_index != cp.morse_index) {
      a.agree = false;
      std::ostringstream msg;
      msg << "critical point with value " << format_double(cp.value) << ": distance " << format_double(best)
          << ", value error " << format_double(dv) << ", index " << cp.morse_index << " vs " << match->morse_index;
      a.mismatches.push_back(msg.str());
    }
  }
  return a;
}

CommandResult cmd_analyze_matrix(const CoefficientMatrix& a, const Space& space, const ExperimentConfig& c) {
  if (a.size() != space.homogeneous_dim()) throw ParseError("matrix size does not match the space");
  if ((a.kind() == SymmetryKind::Hermitian) != space.is_complex())
    throw ParseError("symmetric matrices go with RP^n, Hermitian matrices with CP^n");
  const MorseReport closed = analyze(a, space, c.gap_tol);
  const NumericVerdict numeric = verdict(quadratic_form_polynomial(a, space), space, c.oracle);
  const Agreement agreement = compare_verdicts(closed, numeric, 1e-6, 1e-8 * std::max(1.0, a.operator_norm()));

  CommandResult r;
  r.exit_code = agreement.agree ? kOk : kFailed;
  r.report = {{"command", "analyze-matrix"},
              {"matrix", matrix_to_json(a)},
              {"closed_form", morse_report_to_json(closed)},
              {"numeric", numeric_verdict_to_json(numeric)},
              {"agreement",
               {{"agree", agreement.agree},
                {"max_location_error", agreement.max_location_error},
                {"max_value_error", agreement.max_value_error},
                {"mismatches", agreement.mismatches}}}};
  std::ostringstream csv;
  csv << "method,chart,value,morse_index,hessian_determinant\n";
  for (const auto& p : closed.critical_points)
    csv << "closed_form," << p.chart << ',' << format_double(p.value) << ',' << p.morse_index << ','
        << format_double(p.hessian_determinant) << '\n';
  for (const auto& p : numeric.critical_points)
    csv << "numeric," << p.point.chart << ',' << format_double(p.value) << ',' << p.morse_index << ','
        << format_double(p.hessian_determinant) << '\n';
  r.csv = csv.str();
  r.summary = space.name() + ": " + (closed.is_stable ? "stable minimal Morse" : closed.is_morse ? "Morse, not stable" : "not Morse") +
              (agreement.agree ? "; numeric oracle agrees" : "; numeric oracle DISAGREES");
  return r;
}

CommandResult cmd_stabilize(const ExperimentConfig& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const EigenExpansion f = build_initial_condition(c);
  const Space space = f.space();
  const std::vector<double> grid = c.grid.build();

  CommandResult r;
  r.report = {{"command", "stabilize"}, {"config", config_to_json(c)}, {"initial_condition", expansion_to_json(f)}};
  const CoefficientMatrix a1 = first_level_matrix(f);
  const MorseReport h1 = analyze(a1, space, c.gap_tol);
  r.report["h1"] = {{"matrix", matrix_to_json(a1)}, {"analysis", morse_report_to_json(h1)}};
  if (!h1.is_stable) {
    r.exit_code = kNotInS;
    r.report["status"] = "f0 not in S";
    r.report["diagnostic"] = "projection onto first eigenspace is degenerate";
    r.summary = "f0 not in S: projection onto first eigenspace is degenerate";
    return r;
  }

  StabilizationOptions opts;
  opts.sup_norm = c.sup_norm;
  const StabilizationScan scan = stabilization_time(f, grid, numeric_verifier(c.oracle), opts);

  const double window = asymptotic_window_start(space);
  const DecayFit fit = fit_log_decay(scan.grid, scan.deviations, window);
  const double target = eigenvalue(space, 1) - eigenvalue(space, 2);

  const SupNormEstimator sup(space, c.sup_norm);
  const TailBoundParams params = instantiate_tail_params(f, sup, 0);
  std::vector<double> bounds;
  int violations = 0;
  for (std::size_t i = 0; i < scan.grid.size(); ++i) {
    const double t = scan.grid[i];
    const double b = t > 0.0 ? tail_bound(params, space, t) : std::numeric_limits<double>::infinity();
    bounds.push_back(b);
    if (scan.deviations[i] > b) ++violations;
  }

  Json verdicts = Json::array();
  for (const auto& v : scan.verdicts) verdicts.push_back(grid_verdict_to_json(v));
  r.report["status"] = scan.reached() ? "reached" : "not reached";
  r.report["T"] = scan.reached() ? Json(*scan.T()) : Json(nullptr);
  r.report["certified_on"] = "grid points only";
  r.report["diagnostic"] = scan.diagnostic;
  r.report["grid"] = series_json(scan.grid);
  r.report["deviation_sup"] = series_json(scan.deviations);
  r.report["verdicts"] = verdicts;
  r.report["decay_fit"] = decay_fit_to_json(fit);
  r.report["decay_fit"]["target_slope"] = target;
  r.report["decay_fit"]["relative_error"] = std::abs(fit.slope - target) / std::abs(target);
  r.report["tail_bound"] = {{"C", params.C},
                            {"N", params.N},
                            {"truncation_level", params.truncation_level},
                            {"values", series_json(bounds)},
                            {"violations", violations}};
  r.report["wall_clock_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.csv = scan_to_csv(scan);
  r.exit_code = scan.reached() ? kOk : kNotReached;
  std::ostringstream s;
  s << space.name() << ": ";
  if (scan.reached()) s << "stable minimal Morse from T = " << format_double(*scan.T());
  else s << "not reached on the grid";
  s << "; decay slope " << format_double(fit.slope) << " (target " << format_double(target) << ")";
  r.summary = s.str();
  return r;
}

long long harmonic_dimension_formula(const Space& space, int j) {
  const int n = space.n();
  if (j == 0) return 1;
  if (space.is_complex()) {
    const long long a = binomial(n + j, n), b = binomial(n + j - 1, n);
    return a * a - b * b;
  }
  return binomial(n + 2 * j, n) - binomial(n + 2 * j - 2, n);
}

CommandResult cmd_verify_basis(const Space& space, int j) {
  if (j < 1) throw ParseError("basis level must be >= 1");
  const auto basis = level_basis(space, j);

  bool harmonic = true, invariant = true;
  double max_residual = 0.0;
  for (std::size_t k = 0; k < basis->primitive.size(); ++k) {
    const Polynomial lap = ambient_laplacian(basis->primitive[k]);
    if (!lap.is_zero()) {
      harmonic = false;
      max_residual = std::max(max_residual, coefficient_l1_norm(lap) / basis->norms[k]);
    }
    if (space.is_complex() && !phase_generator(basis->primitive[k]).is_zero()) invariant = false;
  }
  // Without exact arithmetic the check is against rounding level instead.
  if (!basis->exact) harmonic = max_residual <= 1e-12;

  const long long expected = harmonic_dimension_formula(space, j);
  const bool closed_form_level = j == 1;
  const bool dimension_ok = basis->size() == expected && eigenspace_dimension(space, j) == expected;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(basis->gram, Eigen::EigenvaluesOnly);
  const double gmin = es.eigenvalues().minCoeff(), gmax = es.eigenvalues().maxCoeff();
  const double norm_error = (basis->gram.diagonal().array() - 1.0).abs().maxCoeff();

  double cross = 0.0;
  for (int i = 0; i < j; ++i) {
    const auto lower = level_basis(space, i);
    for (const auto& p : basis->elements)
      for (const auto& q : lower->elements) cross = std::max(cross, std::abs(l2_inner_product(p, q, space)));
  }
  const bool orthogonal = cross <= 1e-12;
  const bool passed = harmonic && invariant && dimension_ok && orthogonal && norm_error <= 1e-12 && gmin > 0.0;

  CommandResult r;
  r.exit_code = passed ? kOk : kFailed;
  r.report = {{"command", "verify-basis"},
              {"space", space_to_json(space)},
              {"level", j},
              {"eigenvalue", eigenvalue(space, j)},
              {"passed", passed},
              {"exact_arithmetic", basis->exact},
              {"harmonic", harmonic},
              {"max_laplacian_residual", max_residual},
              {"dimension", basis->size()},
              {"expected_dimension", expected},
              {"dimension_source", closed_form_level ? "closed form" : "harmonic polynomial count"},
              {"dimension_ok", dimension_ok},
              {"gram", {{"min_eigenvalue", gmin}, {"max_eigenvalue", gmax}, {"condition", gmax / gmin}, {"max_norm_error", norm_error}}},
              {"cross_level_max_inner_product", cross},
              {"cross_level_orthogonal", orthogonal}};
  if (space.is_complex()) r.report["phase_invariant"] = invariant;
  std::ostringstream csv;
  csv << "element,primitive_norm,terms\n";
  for (std::size_t k = 0; k < basis->primitive.size(); ++k)
    csv << k << ',' << format_double(basis->norms[k]) << ',' << basis->primitive[k].terms().size() << '\n';
  r.csv = csv.str();
  std::ostringstream s;
  s << space.name() << " level " << j << ": dimension " << basis->size() << " (expected " << expected << "), "
    << (harmonic ? "harmonic" : "NOT harmonic") << ", cross-level max |<.,.>| " << format_double(cross) << " -> "
    << (passed ? "pass" : "FAIL");
  r.summary = s.str();
  return r;
}

}  // namespace morseflow::experiment
