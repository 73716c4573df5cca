#pragma once

#include "morseflow/polynomial.hpp"
#include "morseflow/space.hpp"

#include <Eigen/Dense>

#include <memory>
#include <span>
#include <vector>

namespace morseflow {

/// Laplace-Beltrami eigenvalue of level j: 2j(2j+n-1) on RP^n, 4j(n+j) on CP^n.
double eigenvalue(const Space& space, int j);

/// Dimension of the level-j eigenspace (j >= 0). Level 1 uses the closed
/// forms (n^2+3n)/2 and n(n+2); higher levels count the generated basis.
int eigenspace_dimension(const Space& space, int j);

enum class NullSpaceMethod {
  Exact,     // rational Gauss-Jordan on the integer harmonicity system
  Floating,  // SVD, singular values below 1e-10 * sigma_max treated as zero
};

/// Spanning set of one eigenspace, realized as real ambient polynomials.
struct HarmonicBasis {
  Space space;
  int level = 0;
  /// Unit L^2(sphere) norm; the representation used by expansions.
  std::vector<Polynomial> elements;
  /// Unnormalized forms. Integer coefficients when `exact` is set, so the
  /// harmonicity check on them is exact in double arithmetic.
  std::vector<Polynomial> primitive;
  std::vector<double> norms;
  /// L^2 Gram matrix of `elements`.
  Eigen::MatrixXd gram;
  bool exact = true;

  int size() const { return static_cast<int>(elements.size()); }
};

/// Real-valued eigenfunctions of level j >= 1 as homogeneous harmonic
/// polynomials of degree 2j. On CP^n every element is U(1)-invariant.
/// Level 1 is the coordinate basis of traceless symmetric/Hermitian forms
/// (see first_level_coordinate_basis), normalized.
HarmonicBasis harmonic_basis(const Space& space, int j, NullSpaceMethod method = NullSpaceMethod::Exact);

/// Memoized basis for any level j >= 0 (level 0 is the normalized constant).
/// Thread-safe.
std::shared_ptr<const HarmonicBasis> level_basis(const Space& space, int j);

/// Level-1 basis whose coefficients are the entries a_ij (i<j) and a_ii (i<n+1)
/// of the traceless matrix; on CP^n the off-diagonal entries split into
/// b_ij (real part) and c_ij (imaginary part).
std::vector<Polynomial> first_level_coordinate_basis(const Space& space);

/// Exact sum_k d^2 p / dx_k^2.
Polynomial ambient_laplacian(const Polynomial& p);

/// Generator of the U(1) action, sum_k (x_k d/dy_k - y_k d/dx_k); zero iff p is phase invariant.
Polynomial phase_generator(const Polynomial& p);

/// Integral of x^alpha over the unit sphere S^{m-1} in R^m, m = alpha.size().
double monomial_sphere_integral(std::span<const int> alpha);

/// Area of S^{m-1}.
double sphere_area(int m);

/// L^2 pairing over the unit sphere of the ambient space.
double l2_inner_product(const Polynomial& p, const Polynomial& q, const Space& space);

double l2_norm(const Polynomial& p, const Space& space);

}  // namespace morseflow
