#include "morseflow/heat_flow.hpp"

#include "morseflow/sampling.hpp"
#include "morseflow/spectra.hpp"
#include "morseflow/sphere_function.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace morseflow {

namespace {

Polynomial combine(const HarmonicBasis& basis, const Eigen::VectorXd& c, const Space& space) {
  Polynomial p(space.variable_names());
  for (int k = 0; k < basis.size(); ++k)
    if (c(k) != 0.0) p += basis.elements[static_cast<std::size_t>(k)] * c(k);
  return p;
}

EigenExpansion scale_levels(const EigenExpansion& f, bool drop_constant, double (*rate)(const Space&, int, double),
                            double t) {
  std::map<int, Eigen::VectorXd> out;
  for (const auto& [j, c] : f.levels()) {
    if (drop_constant && j == 0) continue;
    out.emplace(j, c * rate(f.space(), j, t));
  }
  return {f.space(), std::move(out)};
}

double heat_factor(const Space& s, int j, double t) { return std::exp(-eigenvalue(s, j) * t); }
double rescaled_factor(const Space& s, int j, double t) { return std::exp((eigenvalue(s, 1) - eigenvalue(s, j)) * t); }

}  // namespace

EigenExpansion::EigenExpansion(Space space, std::map<int, Eigen::VectorXd> levels)
    : space_(space), levels_(std::move(levels)) {
  Polynomial p(space_.variable_names());
  for (const auto& [j, c] : levels_) {
    if (j < 0) throw std::invalid_argument("negative level index");
    const auto basis = level_basis(space_, j);
    if (c.size() != basis->size())
      throw std::invalid_argument("level " + std::to_string(j) + " expects " + std::to_string(basis->size()) +
                                  " coefficients, got " + std::to_string(c.size()));
    if (!c.allFinite()) throw std::invalid_argument("non-finite coefficient at level " + std::to_string(j));
    p += combine(*basis, c, space_);
  }
  poly_ = std::make_shared<const Polynomial>(std::move(p));
}

Eigen::VectorXd EigenExpansion::level(int j) const {
  auto it = levels_.find(j);
  if (it != levels_.end()) return it->second;
  return Eigen::VectorXd::Zero(level_basis(space_, j)->size());
}

Polynomial EigenExpansion::level_polynomial(int j) const {
  auto it = levels_.find(j);
  if (it == levels_.end()) return Polynomial(space_.variable_names());
  return combine(*level_basis(space_, j), it->second, space_);
}

EigenExpansion evolve(const EigenExpansion& f, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("evolve: t must be non-negative");
  return scale_levels(f, false, heat_factor, t);
}

EigenExpansion rescaled_deviation(const EigenExpansion& f, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("rescaled_deviation: t must be non-negative");
  return scale_levels(f, true, rescaled_factor, t);
}

EigenExpansion tail_levels(const EigenExpansion& f) {
  std::map<int, Eigen::VectorXd> out;
  for (const auto& [j, c] : f.levels())
    if (j >= 2) out.emplace(j, c);
  return {f.space(), std::move(out)};
}

CoefficientMatrix first_level_matrix(const EigenExpansion& f) {
  const auto basis = level_basis(f.space(), 1);
  Eigen::VectorXd a = f.level(1);
  for (int k = 0; k < basis->size(); ++k) a(k) /= basis->norms[static_cast<std::size_t>(k)];
  return coeffs_to_matrix(a, f.space());
}

EigenExpansion with_first_level_matrix(const EigenExpansion& f, const CoefficientMatrix& a) {
  const auto basis = level_basis(f.space(), 1);
  Eigen::VectorXd c = matrix_to_coeffs(a, f.space());
  for (int k = 0; k < basis->size(); ++k) c(k) *= basis->norms[static_cast<std::size_t>(k)];
  auto levels = f.levels();
  levels[1] = c;
  return {f.space(), std::move(levels)};
}

SupNormEstimator::SupNormEstimator(const Space& space, SupNormOptions options) : space_(space), options_(options) {
  if (options_.points_per_dim < 1) throw std::invalid_argument("sup-norm sample count must be positive");
  const int m = space_.ambient_real_dim();
  points_ = quasi_uniform_sphere(m, options_.points_per_dim * m, options_.seed);
}

SupNormEstimator::Estimate SupNormEstimator::estimate(const Polynomial& p) const {
  const Eigen::VectorXd values = kernels::evaluate_batch(CompiledPolynomial(p), points_, options_.exec);
  return estimate_with_values(p, values);
}

SupNormEstimator::Estimate SupNormEstimator::estimate_with_values(const Polynomial& p,
                                                                  const Eigen::VectorXd& values) const {
  if (values.size() != points_.cols()) throw std::invalid_argument("value count does not match the sample set");
  Estimate est;
  est.samples = static_cast<int>(points_.cols());
  const auto best = kernels::sup_abs(values, options_.exec);
  est.value = est.sample_max = best.value;
  est.argmax = points_.col(best.argmax);
  if (p.is_zero() || best.value == 0.0) return est;

  const SphereFunction fn(p, space_);
  const auto seeds = kernels::top_k_abs(values, options_.refine_top);
  struct Local {
    double value = 0.0;
    Eigen::VectorXd x;
  };
  const int iters = options_.ascent_iterations;
  const auto refined = kernels::map_indexed<Local>(
      static_cast<int>(seeds.size()),
      [&](int s) {
        Eigen::VectorXd x = points_.col(seeds[static_cast<std::size_t>(s)]);
        const double sign = values(seeds[static_cast<std::size_t>(s)]) < 0.0 ? -1.0 : 1.0;
        double v = sign * fn.value(x);
        double eta = 1.0 / std::max(fn.scale(), 1e-300);
        for (int it = 0; it < iters; ++it) {
          Eigen::VectorXd g = sign * fn.gradient(x);
          g -= x.dot(g) * x;
          const double gn = g.norm();
          if (gn <= 1e-15 * fn.scale()) break;
          bool moved = false;
          for (int h = 0; h < 60; ++h) {
            const Eigen::VectorXd y = (x + eta * g).normalized();
            const double vy = sign * fn.value(y);
            if (vy > v) {
              x = y;
              v = vy;
              eta *= 2.0;
              moved = true;
              break;
            }
            eta *= 0.5;
          }
          if (!moved) break;
        }
        return Local{v, x};
      },
      options_.exec);
  for (const auto& r : refined)
    if (r.value > est.value) {
      est.value = r.value;
      est.argmax = r.x;
    }
  return est;
}

double deviation_from_h1(const EigenExpansion& f, double t, const SupNormEstimator& sup) {
  return sup.estimate(tail_levels(rescaled_deviation(f, t)).polynomial()).value;
}

double truncation_error_bound(const TailBoundParams& params, const Space& space, double t, int from_level) {
  if (!(t > 0.0)) throw std::invalid_argument("tail bound requires t > 0");
  if (params.N < 0 || !(params.C >= 0.0)) throw std::invalid_argument("tail bound requires C >= 0 and N >= 0");
  const int a = std::max(from_level, params.truncation_level + 1);
  const double l2 = eigenvalue(space, 2);
  // lambda_j is convex in j, so lambda_j >= lambda_a + (j - a) delta for j >= a,
  // and (1 + j^N) / (1 + (j-1)^N) <= ((a+1)/a)^N for j > a.
  const double delta = eigenvalue(space, a + 1) - eigenvalue(space, a);
  const double q = std::pow((a + 1.0) / a, params.N) * std::exp(-delta * t);
  if (!(q < 1.0)) return std::numeric_limits<double>::infinity();
  const double lead = (1.0 + std::pow(static_cast<double>(a), params.N)) * std::exp((l2 - eigenvalue(space, a)) * t);
  return params.C * std::exp((eigenvalue(space, 1) - l2) * t) * lead / (1.0 - q);
}

double tail_bound(const TailBoundParams& params, const Space& space, double t, int from_level) {
  const double tail = truncation_error_bound(params, space, t, from_level);
  const double l2 = eigenvalue(space, 2);
  double sum = 0.0;
  for (int j = params.truncation_level; j >= from_level; --j)
    sum += (1.0 + std::pow(static_cast<double>(j), params.N)) * std::exp((l2 - eigenvalue(space, j)) * t);
  // Rounded outward so the computed value stays an upper bound; at large t it
  // coincides with the leading term to the last bit.
  const int terms = std::max(0, params.truncation_level - from_level + 1) + 4;
  const double outward = 1.0 + 8.0 * terms * std::numeric_limits<double>::epsilon();
  return outward * (params.C * std::exp((eigenvalue(space, 1) - l2) * t) * sum + tail);
}

TailBoundParams instantiate_tail_params(const EigenExpansion& f, const SupNormEstimator& sup, int N) {
  TailBoundParams params;
  params.N = N;
  params.C = 0.0;
  params.truncation_level = std::max(2, f.max_level());
  for (const auto& [j, c] : f.levels()) {
    if (j < 2) continue;
    const double norm = sup.estimate(f.level_polynomial(j)).value;
    params.C = std::max(params.C, norm / (1.0 + std::pow(static_cast<double>(j), N)));
  }
  return params;
}

int min_projection_samples(const Space& space, int j) {
  return std::max(100, 50 * eigenspace_dimension(space, j));
}

ProjectionEstimate project_level(const Eigen::MatrixXd& points, const Eigen::VectorXd& values, const Space& space, int j,
                                 kernels::Exec exec) {
  if (j < 0) throw std::invalid_argument("negative level index");
  if (points.rows() != space.ambient_real_dim()) throw std::invalid_argument("sample dimension does not match space");
  if (points.cols() != values.size()) throw std::invalid_argument("point and value counts differ");
  const int need = min_projection_samples(space, j);
  if (points.cols() < need)
    throw std::invalid_argument("level " + std::to_string(j) + " needs at least " + std::to_string(need) + " samples");
  for (Eigen::Index i = 0; i < points.cols(); ++i)
    if (std::abs(points.col(i).norm() - 1.0) > 1e-9) throw std::invalid_argument("sample point off the unit sphere");

  const auto basis = level_basis(space, j);
  std::vector<CompiledPolynomial> compiled;
  compiled.reserve(basis->elements.size());
  for (const auto& e : basis->elements) compiled.emplace_back(e);
  const auto moments = kernels::projection_moments(compiled, points, values, exec);

  // <f, B_k> = |S| E[f B_k]; the basis is unit norm but not orthogonal.
  const double area = sphere_area(space.ambient_real_dim());
  const Eigen::LDLT<Eigen::MatrixXd> gram(basis->gram);
  const Eigen::MatrixXd ginv = gram.solve(Eigen::MatrixXd::Identity(basis->size(), basis->size()));
  ProjectionEstimate out;
  out.samples = static_cast<int>(points.cols());
  out.coefficients = area * (ginv * moments.mean);
  const Eigen::MatrixXd cov = (area * area / static_cast<double>(points.cols())) * (ginv * moments.cov * ginv);
  out.standard_errors = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  return out;
}

EigenExpansion expansion_from_samples(const Eigen::MatrixXd& points, const Eigen::VectorXd& values, const Space& space,
                                      int max_level, kernels::Exec exec) {
  std::map<int, Eigen::VectorXd> levels;
  for (int j = 0; j <= max_level; ++j) levels.emplace(j, project_level(points, values, space, j, exec).coefficients);
  return {space, std::move(levels)};
}

StabilizationScan stabilization_time(const EigenExpansion& f, std::span<const double> grid, const MorseVerifier& verifier,
                                     const StabilizationOptions& options) {
  if (grid.empty()) throw std::invalid_argument("stabilization grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0) || !std::isfinite(grid[i])) throw std::invalid_argument("grid points must be finite and >= 0");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw std::invalid_argument("grid must be strictly increasing");
  }
  const Space& space = f.space();
  StabilizationScan scan;
  scan.grid.assign(grid.begin(), grid.end());

  scan.h1_report = analyze(first_level_matrix(f), space);
  if (!scan.h1_report->is_stable) {
    scan.diagnostic = "projection onto first eigenspace is degenerate";
    return scan;
  }

  SupNormOptions sup_options = options.sup_norm;
  sup_options.exec = options.exec;
  const SupNormEstimator sup(space, sup_options);
  const EigenExpansion tail = tail_levels(f);
  std::vector<std::pair<int, Eigen::VectorXd>> tail_values;
  for (const auto& [j, c] : tail.levels())
    tail_values.emplace_back(j, kernels::evaluate_batch(CompiledPolynomial(tail.level_polynomial(j)), sup.points(),
                                                        options.exec));

  struct Point {
    GridVerdict verdict;
    double deviation = 0.0;
  };
  const auto results = kernels::map_indexed<Point>(
      static_cast<int>(grid.size()),
      [&](int i) {
        const double t = grid[static_cast<std::size_t>(i)];
        const EigenExpansion scaled = rescaled_deviation(f, t);
        Eigen::VectorXd values = Eigen::VectorXd::Zero(sup.points().cols());
        for (const auto& [j, v] : tail_values) values += rescaled_factor(space, j, t) * v;
        Point p;
        p.deviation = sup.estimate_with_values(tail_levels(scaled).polynomial(), values).value;
        p.verdict = verifier(scaled.polynomial(), space);
        return p;
      },
      options.exec);

  for (const auto& r : results) {
    scan.verdicts.push_back(r.verdict);
    scan.deviations.push_back(r.deviation);
  }
  std::size_t first = grid.size();
  while (first > 0 && scan.verdicts[first - 1].accepted()) --first;
  if (first < grid.size()) {
    scan.first_stable_index = first;
  } else {
    scan.diagnostic = "not reached: verdict false at the last grid point";
  }
  return scan;
}

std::vector<double> geometric_grid(double start, double stop, int count) {
  if (!(start > 0.0) || !(stop > start) || count < 2) throw std::invalid_argument("geometric grid needs 0 < start < stop, count >= 2");
  std::vector<double> g(static_cast<std::size_t>(count));
  const double ratio = std::log(stop / start) / (count - 1);
  for (int i = 0; i < count; ++i) g[static_cast<std::size_t>(i)] = start * std::exp(ratio * i);
  g.back() = stop;
  return g;
}

std::vector<double> linear_grid(double start, double stop, int count) {
  if (!(start >= 0.0) || !(stop > start) || count < 2) throw std::invalid_argument("linear grid needs 0 <= start < stop, count >= 2");
  std::vector<double> g(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) g[static_cast<std::size_t>(i)] = start + (stop - start) * i / (count - 1);
  g.back() = stop;
  return g;
}

DecayFit fit_log_decay(std::span<const double> t, std::span<const double> deviation, double t_min) {
  if (t.size() != deviation.size()) throw std::invalid_argument("time and deviation series differ in length");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] >= t_min && deviation[i] > 0.0 && std::isfinite(deviation[i])) {
      xs.push_back(t[i]);
      ys.push_back(std::log(deviation[i]));
    }
  DecayFit fit;
  fit.t_min = t_min;
  fit.points = static_cast<int>(xs.size());
  if (xs.size() < 2) return fit;
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0) return fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss += r * r;
    fit.max_abs_residual = std::max(fit.max_abs_residual, std::abs(r));
  }
  fit.rms_residual = std::sqrt(ss / n);
  fit.r_squared = syy > 0.0 ? 1.0 - ss / syy : 1.0;
  return fit;
}

double asymptotic_window_start(const Space& space, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("ratio must lie in (0, 1)");
  return std::log(1.0 / ratio) / (eigenvalue(space, 3) - eigenvalue(space, 2));
}

}  // namespace morseflow
