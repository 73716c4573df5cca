#include "morseflow/oracle.hpp"

#include "morseflow/sampling.hpp"
#include "morseflow/sphere_function.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace morseflow {

namespace {

Eigen::VectorXd min_norm_solve(const Eigen::MatrixXd& j, const Eigen::VectorXd& rhs) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(j, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-13);
  return svd.solve(rhs);
}

// Watchdog: after kSlowSteps iterations that fail to halve the merit, or a
// failed line search, one full Newton step is taken unconditionally. This
// leaves spurious local minima of |grad f|, at most kMaxKicks times per start.
constexpr int kSlowSteps = 3;
constexpr int kMaxKicks = 10;

struct Attempt {
  bool converged = false;
  Eigen::VectorXd ambient;
  double residual = std::numeric_limits<double>::infinity();
};

Eigen::VectorXd lagrange_residual(const SphereFunction& fn, const Eigen::VectorXd& y, double mu) {
  const Eigen::Index m = y.size();
  Eigen::VectorXd r(m + 1);
  r.head(m) = fn.gradient(y) - 2.0 * mu * y;
  r(m) = y.squaredNorm() - 1.0;
  return r;
}

// Newton on grad F(y) = 2 mu y, |y|^2 = 1.
Attempt newton_real(const SphereFunction& fn, Eigen::VectorXd y, const OracleConfig& cfg, double target) {
  const Eigen::Index m = y.size();
  double mu = 0.5 * y.dot(fn.gradient(y));
  Eigen::VectorXd r = lagrange_residual(fn, y, mu);
  double merit = r.norm();
  int slow = 0, kicks = 0;
  for (int it = 0; it < cfg.max_iterations && merit > target; ++it) {
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(m + 1, m + 1);
    jac.topLeftCorner(m, m) = fn.hessian(y) - 2.0 * mu * Eigen::MatrixXd::Identity(m, m);
    jac.topRightCorner(m, 1) = -2.0 * y;
    jac.bottomLeftCorner(1, m) = 2.0 * y.transpose();
    const Eigen::VectorXd step = min_norm_solve(jac, -r);
    if (!step.allFinite()) break;
    const double before = merit;
    bool moved = false;
    if (slow < kSlowSteps) {
      for (double alpha = 1.0; alpha > 1e-10; alpha *= 0.5) {
        const Eigen::VectorXd y2 = y + alpha * step.head(m);
        const double mu2 = mu + alpha * step(m);
        const Eigen::VectorXd r2 = lagrange_residual(fn, y2, mu2);
        if (r2.norm() < merit) {
          y = y2;
          mu = mu2;
          r = r2;
          merit = r2.norm();
          moved = true;
          break;
        }
      }
    }
    if (!moved) {
      if (kicks == kMaxKicks) break;
      ++kicks;
      const double len = std::min(1.0, 1.0 / step.head(m).norm());
      y = (y + len * step.head(m)).normalized();
      mu = 0.5 * y.dot(fn.gradient(y));
      r = lagrange_residual(fn, y, mu);
      merit = r.norm();
      slow = 0;
      continue;
    }
    slow = merit > 0.5 * before ? slow + 1 : 0;
  }
  Attempt a;
  a.converged = merit <= target && y.allFinite();
  a.ambient = y.normalized();
  a.residual = merit;
  return a;
}

// Tangential part of the ambient gradient at a unit point. Chart independent,
// so merits from different charts compare.
double sphere_gradient_norm(const SphereFunction& fn, const Eigen::VectorXd& x) {
  const Eigen::VectorXd y = x.normalized();
  const Eigen::VectorXd g = fn.gradient(y);
  return (g - y.dot(g) * y).norm();
}

// Newton on the gradient of f in a chart centered at the current iterate.
// Centered charts are isometric to first order at u = 0, so both the Newton
// step and -H g decrease the chart-independent sphere merit; -H g is the
// fallback when the Newton step gives no decrease.
Attempt newton_complex(const SphereFunction& fn, const Space& space, const Eigen::VectorXd& start,
                       const OracleConfig& cfg, double target) {
  Eigen::VectorXd x = start.normalized();
  double merit = sphere_gradient_norm(fn, x);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(space.manifold_dim());
  int slow = 0, kicks = 0;
  for (int it = 0; it < cfg.max_iterations && merit > target; ++it) {
    const Chart chart = centered_chart(space, x);
    const ChartJet jet = fn.chart_jet(chart, zero);
    const Eigen::VectorXd newton = min_norm_solve(jet.hessian, -jet.gradient);
    if (!newton.allFinite()) break;
    const Eigen::VectorXd descent = -(jet.hessian * jet.gradient);
    const double before = merit;
    bool moved = false;
    for (const Eigen::VectorXd* dir : {&newton, &descent}) {
      if (slow >= kSlowSteps || dir->norm() == 0.0) break;
      // Descent steps are scaled to the Newton step length, capped at 1.
      const double len = dir == &newton ? 1.0 : std::min(1.0, newton.norm()) / dir->norm();
      for (double alpha = len; alpha > 1e-10 * len; alpha *= 0.5) {
        const Eigen::VectorXd x2 = chart_to_ambient(chart, alpha * *dir);
        const double m2 = sphere_gradient_norm(fn, x2);
        if (m2 < merit) {
          x = x2;
          merit = m2;
          moved = true;
          break;
        }
      }
      if (moved) break;
    }
    if (!moved) {
      if (kicks == kMaxKicks || newton.norm() == 0.0) break;
      ++kicks;
      x = chart_to_ambient(chart, std::min(1.0, 1.0 / newton.norm()) * newton);
      merit = sphere_gradient_norm(fn, x);
      slow = 0;
      continue;
    }
    slow = merit > 0.5 * before ? slow + 1 : 0;
  }
  Attempt a;
  a.converged = merit <= target && x.allFinite();
  a.ambient = x;
  a.residual = merit;
  return a;
}

Eigen::MatrixXd fd_hessian_at(const SphereFunction& fn, const Chart& chart, const Eigen::VectorXd& u, double h) {
  const Eigen::Index d = u.size();
  Eigen::MatrixXd out(d, d);
  auto val = [&](const Eigen::VectorXd& w) { return fn.value(chart_to_ambient(chart, w)); };
  const double f0 = val(u);
  for (Eigen::Index a = 0; a < d; ++a) {
    Eigen::VectorXd ea = Eigen::VectorXd::Zero(d);
    ea(a) = h;
    out(a, a) = (val(u + ea) - 2.0 * f0 + val(u - ea)) / (h * h);
    for (Eigen::Index b = a + 1; b < d; ++b) {
      Eigen::VectorXd eb = Eigen::VectorXd::Zero(d);
      eb(b) = h;
      out(a, b) = out(b, a) = (val(u + ea + eb) - val(u + ea - eb) - val(u - ea + eb) + val(u - ea - eb)) / (4.0 * h * h);
    }
  }
  return out;
}

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  for (Eigen::Index k = 0; k < a.size(); ++k)
    if (a(k) != b(k)) return a(k) < b(k);
  return false;
}

}  // namespace

ChartPoint chart_point(const Space& space, int chart, const Eigen::VectorXd& coordinates) {
  if (chart < 0 || chart >= space.homogeneous_dim()) throw std::invalid_argument("chart index out of range");
  if (coordinates.size() != space.manifold_dim()) throw std::invalid_argument("chart coordinates have wrong dimension");
  if (!coordinates.allFinite()) throw std::invalid_argument("point outside chart domain");
  ChartPoint p;
  p.chart = chart;
  p.coordinates = coordinates;
  p.ambient = chart_to_ambient(standard_chart(space, chart), coordinates);
  return p;
}

ChartPoint chart_point_from_ambient(const Space& space, const Eigen::VectorXd& ambient) {
  if (ambient.size() != space.ambient_real_dim() || !(ambient.norm() > 0.0))
    throw std::invalid_argument("ambient point has wrong dimension or is zero");
  const int i = dominant_coordinate(space, ambient);
  ChartPoint p;
  p.chart = i;
  p.ambient = canonical_representative(space, ambient);
  p.coordinates = *ambient_to_chart(standard_chart(space, i), p.ambient);
  return p;
}

Eigen::VectorXd chart_gradient(const Polynomial& f, const Space& space, const ChartPoint& p) {
  const ChartPoint q = chart_point(space, p.chart, p.coordinates);
  return SphereFunction(f, space).chart_jet(standard_chart(space, q.chart), q.coordinates).gradient;
}

Eigen::MatrixXd chart_hessian(const Polynomial& f, const Space& space, const ChartPoint& p) {
  const ChartPoint q = chart_point(space, p.chart, p.coordinates);
  return SphereFunction(f, space).chart_jet(standard_chart(space, q.chart), q.coordinates).hessian;
}

Eigen::VectorXd chart_gradient_fd(const Polynomial& f, const Space& space, const ChartPoint& p, double h) {
  const ChartPoint q = chart_point(space, p.chart, p.coordinates);
  const SphereFunction fn(f, space);
  const Chart chart = standard_chart(space, q.chart);
  Eigen::VectorXd g(q.coordinates.size());
  for (Eigen::Index a = 0; a < g.size(); ++a) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(g.size());
    e(a) = h;
    g(a) = (fn.value(chart_to_ambient(chart, q.coordinates + e)) - fn.value(chart_to_ambient(chart, q.coordinates - e))) /
           (2.0 * h);
  }
  return g;
}

Eigen::MatrixXd chart_hessian_fd(const Polynomial& f, const Space& space, const ChartPoint& p, double h) {
  const ChartPoint q = chart_point(space, p.chart, p.coordinates);
  return fd_hessian_at(SphereFunction(f, space), standard_chart(space, q.chart), q.coordinates, h);
}

NumericVerdict find_critical_points(const Polynomial& f, const Space& space, const OracleConfig& cfg) {
  if (static_cast<int>(f.num_variables()) != space.ambient_real_dim())
    throw std::invalid_argument("polynomial arity does not match the ambient space");
  if (cfg.max_iterations < 1 || !(cfg.newton_tol > 0.0) || !(cfg.dedup_radius > 0.0) || !(cfg.hess_tol > 0.0) ||
      !(cfg.value_tol > 0.0) || !(cfg.fd_step > 0.0))
    throw std::invalid_argument("oracle tolerances must be positive");

  const SphereFunction fn(f, space);
  NumericVerdict out;
  out.space = space;
  out.config = cfg;
  out.function_scale = fn.scale();
  out.starts = cfg.effective_starts(space);

  const int m = space.ambient_real_dim();
  const Eigen::MatrixXd starts = quasi_uniform_sphere(m, out.starts, stream_seed(cfg.seed, "oracle"));
  const double target = cfg.newton_tol * fn.scale();
  const auto attempts = kernels::map_indexed<Attempt>(
      out.starts,
      [&](int s) {
        const Eigen::VectorXd x0 = starts.col(s);
        return space.is_complex() ? newton_complex(fn, space, x0, cfg, target) : newton_real(fn, x0, cfg, target);
      },
      cfg.exec);

  // Merge converged starts in start order.
  std::vector<NumericCriticalPoint> found;
  for (const auto& a : attempts) {
    if (!a.converged) continue;
    ++out.converged;
    const Eigen::VectorXd x = canonical_representative(space, a.ambient);
    bool merged = false;
    for (auto& p : found)
      if (projective_distance(space, p.point.ambient, x) < cfg.dedup_radius) {
        ++p.hits;
        if (a.residual < p.residual) {
          p.residual = a.residual;
          p.point.ambient = x;
        }
        merged = true;
        break;
      }
    if (!merged) {
      NumericCriticalPoint p;
      p.point.ambient = x;
      p.residual = a.residual;
      p.hits = 1;
      found.push_back(std::move(p));
    }
  }
  if (2 * out.converged < out.starts)
    throw OracleError("Newton failed on " + std::to_string(out.starts - out.converged) + " of " +
                      std::to_string(out.starts) + " starts");

  // Classify in a chart centered at each point.
  std::vector<Eigen::MatrixXd> hessians(found.size());
  double hmax = 0.0;
  for (std::size_t i = 0; i < found.size(); ++i) {
    auto& p = found[i];
    p.point = chart_point_from_ambient(space, p.point.ambient);
    const Chart centered = centered_chart(space, p.point.ambient);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(space.manifold_dim());
    const ChartJet jet = fn.chart_jet(centered, zero);
    p.value = jet.value;
    hessians[i] = 0.5 * (jet.hessian + jet.hessian.transpose());
    hmax = std::max(hmax, hessians[i].cwiseAbs().maxCoeff());
    const Eigen::MatrixXd fd = fd_hessian_at(fn, centered, zero, cfg.fd_step);
    const double denom = std::max(hessians[i].cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    p.fd_hessian_error = (fd - hessians[i]).cwiseAbs().maxCoeff() / denom;
  }
  out.hess_threshold = cfg.hess_tol * hmax;

  bool all_nondegenerate = !found.empty();
  for (std::size_t i = 0; i < found.size(); ++i) {
    auto& p = found[i];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hessians[i], Eigen::EigenvaluesOnly);
    p.hessian_eigenvalues = es.eigenvalues();
    p.hessian_determinant = p.hessian_eigenvalues.prod();
    p.morse_index = static_cast<int>((p.hessian_eigenvalues.array() < -out.hess_threshold).count());
    p.degenerate = !(p.hessian_eigenvalues.cwiseAbs().minCoeff() > out.hess_threshold);
    if (p.degenerate) all_nondegenerate = false;
  }

  std::sort(found.begin(), found.end(), [](const NumericCriticalPoint& a, const NumericCriticalPoint& b) {
    if (a.point.chart != b.point.chart) return a.point.chart < b.point.chart;
    return lex_less(a.point.ambient, b.point.ambient);
  });

  double vmin = std::numeric_limits<double>::infinity(), vmax = -vmin;
  for (const auto& p : found) {
    vmin = std::min(vmin, p.value);
    vmax = std::max(vmax, p.value);
  }
  out.value_threshold = found.empty() ? 0.0 : cfg.value_tol * (vmax - vmin);

  std::vector<double> values;
  for (const auto& p : found) values.push_back(p.value);
  std::sort(values.begin(), values.end());
  out.min_value_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < values.size(); ++i) out.min_value_gap = std::min(out.min_value_gap, values[i] - values[i - 1]);
  if (values.size() < 2) out.min_value_gap = 0.0;

  // A continuum of critical points shows up as many distinct solutions with
  // singular Hessians, or as nearby solutions at equal height.
  const int h = space.homogeneous_dim();
  bool cluster = static_cast<int>(found.size()) > 3 * h && !all_nondegenerate;
  for (std::size_t i = 0; i < found.size() && !cluster; ++i)
    for (std::size_t k = i + 1; k < found.size() && !cluster; ++k) {
      const double d = projective_distance(space, found[i].point.ambient, found[k].point.ambient);
      if (d > cfg.dedup_radius && d < 100.0 * cfg.dedup_radius &&
          std::abs(found[i].value - found[k].value) <= out.value_threshold)
        cluster = true;
    }
  out.degenerate_cluster_detected = cluster;

  out.is_morse = all_nondegenerate && !cluster;
  out.has_distinct_values = values.size() < 2 || out.min_value_gap > out.value_threshold;
  bool pattern = static_cast<int>(found.size()) == h;
  if (pattern) {
    std::vector<int> idx;
    for (const auto& p : found) idx.push_back(p.morse_index);
    std::sort(idx.begin(), idx.end());
    const int step = space.is_complex() ? 2 : 1;
    for (int k = 0; k < h; ++k)
      if (idx[static_cast<std::size_t>(k)] != step * k) pattern = false;
  }
  out.is_minimal = out.is_morse && pattern;
  out.is_stable = out.is_morse && out.has_distinct_values;

  if (found.empty()) out.diagnostic = "no critical points found";
  else if (cluster) out.diagnostic = "non-isolated critical points";
  else if (!all_nondegenerate) out.diagnostic = "degenerate Hessian";
  out.critical_points = std::move(found);
  return out;
}

NumericVerdict verdict(const Polynomial& f, const Space& space, const OracleConfig& config) {
  return find_critical_points(f, space, config);
}

GridVerdict to_grid_verdict(const NumericVerdict& v) {
  GridVerdict g;
  g.is_morse = v.is_morse;
  g.is_minimal = v.is_minimal;
  g.has_distinct_values = v.has_distinct_values;
  g.is_stable = v.is_stable;
  g.margin = v.min_value_gap;
  g.critical_points = static_cast<int>(v.critical_points.size());
  g.diagnostic = v.diagnostic;
  return g;
}

MorseVerifier numeric_verifier(OracleConfig config) {
  return [config](const Polynomial& f, const Space& space) {
    try {
      return to_grid_verdict(verdict(f, space, config));
    } catch (const OracleError& e) {
      GridVerdict g;
      g.diagnostic = e.what();
      return g;
    }
  };
}

}  // namespace morseflow
