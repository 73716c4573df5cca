#pragma once

#include "morseflow/polynomial.hpp"
#include "morseflow/space.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace morseflow {

/// Flat term list for fast repeated evaluation of a real polynomial.
class CompiledPolynomial {
 public:
  CompiledPolynomial() = default;
  explicit CompiledPolynomial(const Polynomial& p);

  double operator()(const double* x) const;
  double operator()(const Eigen::VectorXd& x) const { return (*this)(x.data()); }
  int num_variables() const { return nvars_; }
  std::size_t num_terms() const { return coef_.size(); }

 private:
  int nvars_ = 0;
  std::vector<double> coef_;
  std::vector<std::uint32_t> offsets_;
  std::vector<std::pair<int, int>> factors_;  // (variable, exponent), exponent > 0
};

/// An affine chart u -> [center + directions * u] of RP^n or CP^n. Columns of
/// `directions` are orthonormal and orthogonal to `center` (and, on CP^n, to
/// the phase direction i*center), so |center + directions*u|^2 = 1 + |u|^2.
/// Standard charts are the inhomogeneous coordinates z_i = 1; centered charts
/// put an arbitrary point at u = 0 with an orthonormal (unitary) frame.
struct Chart {
  SpaceKind kind = SpaceKind::RealProjective;
  int index = -1;          // standard chart index, -1 for centered charts
  Eigen::MatrixXcd frame;  // column 0 is the center; real entries on RP^n
  Eigen::VectorXd center;
  Eigen::MatrixXd directions;
};

Chart standard_chart(const Space& space, int i);
Chart centered_chart(const Space& space, const Eigen::VectorXd& ambient_point);

/// Unit ambient representative of the chart point u.
Eigen::VectorXd chart_to_ambient(const Chart& chart, const Eigen::VectorXd& u);
/// Chart coordinates of the line through v; nullopt outside the chart domain.
std::optional<Eigen::VectorXd> ambient_to_chart(const Chart& chart, const Eigen::VectorXd& v);

/// Homogeneous coordinate of largest modulus.
int dominant_coordinate(const Space& space, const Eigen::VectorXd& v);

/// Distance between the lines through unit vectors a and b: sin of the angle
/// (real) or of the Fubini-Study angle (complex).
double projective_distance(const Space& space, const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Representative with first significant coordinate positive (RP^n) or real positive (CP^n).
Eigen::VectorXd canonical_representative(const Space& space, const Eigen::VectorXd& v);

struct ChartJet {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

/// A function on RP^n / CP^n given by an ambient polynomial F, read on the
/// sphere as x -> F(x/|x|). Homogeneous parts are kept separately so chart
/// expressions sum_d P_d(u~) (1+|u|^2)^{-d/2} differentiate exactly.
class SphereFunction {
 public:
  SphereFunction(const Polynomial& p, const Space& space);

  const Space& space() const { return space_; }
  const Polynomial& polynomial() const { return poly_; }

  double value(const Eigen::VectorXd& x) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const;

  /// Exact value, gradient and Hessian of the chart expression at u.
  ChartJet chart_jet(const Chart& chart, const Eigen::VectorXd& u) const;

  /// sum over parts of l1(coefficients) * max(1, degree); sets tolerance scales.
  double scale() const { return scale_; }

 private:
  struct Part {
    int degree = 0;
    CompiledPolynomial value;
    std::vector<CompiledPolynomial> grad;
    std::vector<CompiledPolynomial> hess;  // upper triangle, row-major
  };

  void ambient_jet(const Part& part, const Eigen::VectorXd& x, double& v, Eigen::VectorXd* g, Eigen::MatrixXd* h) const;

  Space space_;
  Polynomial poly_;
  std::vector<Part> parts_;
  double scale_ = 0.0;
};

}  // namespace morseflow
