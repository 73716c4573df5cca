#pragma once

#include "morseflow/polynomial.hpp"
#include "morseflow/space.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace morseflow {

enum class SymmetryKind { Symmetric, Hermitian };

/// Symmetric (RP^n) or Hermitian (CP^n) matrix A of a first-eigenspace
/// function. On CP^n the function is sum_ij a_ij z_i conj(z_j) / |z|^2.
class CoefficientMatrix {
 public:
  /// Throws std::invalid_argument unless A = A^T within 1e-12 * max(1, max|a_ij|).
  static CoefficientMatrix symmetric(const Eigen::MatrixXd& a);
  /// Throws std::invalid_argument unless A = A^* within 1e-12 * max(1, max|a_ij|).
  static CoefficientMatrix hermitian(const Eigen::MatrixXcd& a);

  SymmetryKind kind() const { return kind_; }
  int size() const { return static_cast<int>(entries_.rows()); }
  const Eigen::MatrixXcd& entries() const { return entries_; }
  Eigen::MatrixXd real_entries() const { return entries_.real(); }

  double trace() const { return entries_.trace().real(); }
  bool is_traceless(double tol = 1e-12) const;
  double operator_norm() const;

  CoefficientMatrix operator+(const CoefficientMatrix& e) const;
  CoefficientMatrix operator*(double s) const;

 private:
  CoefficientMatrix(SymmetryKind kind, Eigen::MatrixXcd a) : kind_(kind), entries_(std::move(a)) {}
  SymmetryKind kind_;
  Eigen::MatrixXcd entries_;
};

struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;  // ascending
  Eigen::MatrixXcd frame;       // orthonormal eigenvector columns
};

SpectralDecomposition spectral_decomposition(const CoefficientMatrix& a);

struct CriticalPoint {
  Eigen::VectorXd location;  // canonical unit representative, real ambient coordinates
  double value = 0.0;
  int chart = 0;  // dominant homogeneous coordinate
  Eigen::VectorXd hessian_eigenvalues;  // ascending, in a chart centered at the point
  int morse_index = 0;
  double hessian_determinant = 0.0;
};

struct MorseReport {
  Space space;
  bool is_morse = false;
  bool is_minimal = false;
  bool has_distinct_values = false;
  bool is_stable = false;
  std::vector<CriticalPoint> critical_points;
  double stability_margin = 0.0;
  double gap_tol = 0.0;
  Eigen::VectorXd eigenvalues;
  /// Groups of eigenvalue indices closer than gap_tol; only groups of size > 1 are listed.
  std::vector<std::vector<int>> degenerate_levels;
};

/// 1e-9 * (1 + |A|_op).
double default_gap_tol(const CoefficientMatrix& a);

/// Closed-form analysis of x -> x^T A x on RP^n.
MorseReport analyze_real(const CoefficientMatrix& a, const Space& space, std::optional<double> gap_tol = {});
/// Closed-form analysis of z -> sum a_ij z_i conj(z_j) / |z|^2 on CP^n.
MorseReport analyze_complex(const CoefficientMatrix& a, const Space& space, std::optional<double> gap_tol = {});
/// Dispatches on the space kind.
MorseReport analyze(const CoefficientMatrix& a, const Space& space, std::optional<double> gap_tol = {});

/// Traceless matrix with the given first_level_coordinate_basis coefficients.
CoefficientMatrix coeffs_to_matrix(const Eigen::VectorXd& coeffs, const Space& space);
/// Inverse of coeffs_to_matrix; throws for matrices that are not traceless.
Eigen::VectorXd matrix_to_coeffs(const CoefficientMatrix& a, const Space& space);

/// The quadratic ambient polynomial of A (the first-eigenspace function when A is traceless).
Polynomial quadratic_form_polynomial(const CoefficientMatrix& a, const Space& space);
/// Reads A back from a quadratic form; throws if the form is not of the
/// required shape (homogeneous of degree 2, phase invariant on CP^n).
CoefficientMatrix matrix_from_quadratic(const Polynomial& p, const Space& space);

/// Shifts the eigenvalues by evenly spaced traceless offsets in [-eps, eps],
/// keeping the eigenframe. Result: |A' - A|_op <= eps, same trace, all gaps
/// >= 2 eps / n. Matrices whose gaps are already >= 2 eps / n are returned as is.
CoefficientMatrix perturb_to_distinct(const CoefficientMatrix& a, double epsilon);

/// min_{i<j} |lambda_i - lambda_j|. Any symmetric/Hermitian E with
/// |E|_op < margin/2 keeps the spectrum of A+E simple (Weyl).
double stability_margin(const CoefficientMatrix& a);

}  // namespace morseflow
