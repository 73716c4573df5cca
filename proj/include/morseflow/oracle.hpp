#pragma once

#include "morseflow/heat_flow.hpp"
#include "morseflow/kernels.hpp"
#include "morseflow/polynomial.hpp"
#include "morseflow/space.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

// Numerical critical point search, independent of the closed forms in morse.hpp.
namespace morseflow {

class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OracleConfig {
  int starts = 0;  // 0: 50 (n+1)^2
  double newton_tol = 1e-12;
  int max_iterations = 100;
  double dedup_radius = 1e-5;
  double hess_tol = 1e-8;
  double value_tol = 1e-8;
  double fd_step = 1e-4;
  std::uint64_t seed = 0x0c1e5eedULL;
  kernels::Exec exec = kernels::Exec::Parallel;

  int effective_starts(const Space& space) const {
    return starts > 0 ? starts : 50 * space.homogeneous_dim() * space.homogeneous_dim();
  }
};

/// A point in the standard chart z_chart = 1.
struct ChartPoint {
  int chart = 0;
  Eigen::VectorXd coordinates;  // n (real) or 2n (complex, Re/Im interleaved)
  Eigen::VectorXd ambient;      // unit representative
};

/// Throws std::invalid_argument for a bad chart index or coordinate count.
ChartPoint chart_point(const Space& space, int chart, const Eigen::VectorXd& coordinates);
/// The point in the chart of its dominant homogeneous coordinate.
ChartPoint chart_point_from_ambient(const Space& space, const Eigen::VectorXd& ambient);

/// Exact derivatives of the chart expression of f at p.
Eigen::VectorXd chart_gradient(const Polynomial& f, const Space& space, const ChartPoint& p);
Eigen::MatrixXd chart_hessian(const Polynomial& f, const Space& space, const ChartPoint& p);
/// Central differences of chart values with step h.
Eigen::VectorXd chart_gradient_fd(const Polynomial& f, const Space& space, const ChartPoint& p, double h = 1e-5);
Eigen::MatrixXd chart_hessian_fd(const Polynomial& f, const Space& space, const ChartPoint& p, double h = 1e-4);

struct NumericCriticalPoint {
  ChartPoint point;
  double value = 0.0;
  /// Spectrum of the Hessian in a chart centered at the point (orthonormal frame).
  Eigen::VectorXd hessian_eigenvalues;
  int morse_index = 0;
  double hessian_determinant = 0.0;
  /// Max-entry relative gap between the exact and finite-difference Hessians.
  double fd_hessian_error = 0.0;
  double residual = 0.0;
  int hits = 0;  // converged starts merged into this point
  bool degenerate = false;
};

struct NumericVerdict {
  Space space = Space::real(1);
  std::vector<NumericCriticalPoint> critical_points;  // by chart, then canonical coordinates
  bool degenerate_cluster_detected = false;
  bool is_morse = false;
  bool is_minimal = false;
  bool has_distinct_values = false;
  bool is_stable = false;
  double min_value_gap = 0.0;
  OracleConfig config;
  double function_scale = 0.0;
  double hess_threshold = 0.0;   // hess_tol * largest Hessian entry
  double value_threshold = 0.0;  // value_tol * value range
  int starts = 0;
  int converged = 0;
  std::string diagnostic;
};

/// Multistart Newton search, deduplication and Hessian classification.
/// Throws OracleError when more than half of the starts fail to converge.
NumericVerdict find_critical_points(const Polynomial& f, const Space& space, const OracleConfig& config = {});

/// Same as find_critical_points; the flags are the Morse/stability verdict.
NumericVerdict verdict(const Polynomial& f, const Space& space, const OracleConfig& config = {});

GridVerdict to_grid_verdict(const NumericVerdict& v);

/// Verifier for stabilization_time; oracle failures become a false verdict with a diagnostic.
MorseVerifier numeric_verifier(OracleConfig config = {});

}  // namespace morseflow
