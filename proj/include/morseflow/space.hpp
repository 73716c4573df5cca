#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace morseflow {

enum class SpaceKind { RealProjective, ComplexProjective };

/// RP^n (functions on S^n invariant under x -> -x) or CP^n (functions on
/// S^{2n+1} invariant under the U(1) phase action), n >= 1.
class Space {
 public:
  Space(SpaceKind kind, int n) : kind_(kind), n_(n) {
    if (n < 1) throw std::invalid_argument("projective dimension must be positive");
  }

  static Space real(int n) { return {SpaceKind::RealProjective, n}; }
  static Space complex(int n) { return {SpaceKind::ComplexProjective, n}; }

  SpaceKind kind() const { return kind_; }
  bool is_complex() const { return kind_ == SpaceKind::ComplexProjective; }
  int n() const { return n_; }

  /// Number of homogeneous coordinates (n+1), real or complex.
  int homogeneous_dim() const { return n_ + 1; }
  /// Real dimension of the ambient Euclidean space: n+1 or 2n+2.
  int ambient_real_dim() const { return is_complex() ? 2 * n_ + 2 : n_ + 1; }
  /// Real dimension of the manifold: n or 2n.
  int manifold_dim() const { return is_complex() ? 2 * n_ : n_; }
  int morse_smale_characteristic() const { return n_ + 1; }
  /// Integer r with eigenvalue(j) > r*j for every j >= 1.
  int growth_rate_witness() const { return is_complex() ? 4 * n_ : n_ + 1; }

  /// Ambient coordinate names; complex spaces interleave real and imaginary parts.
  std::vector<std::string> variable_names() const;
  std::string name() const { return (is_complex() ? "CP" : "RP") + std::to_string(n_); }

  friend bool operator==(const Space&, const Space&) = default;

 private:
  SpaceKind kind_;
  int n_;
};

/// (Re z1, Im z1, Re z2, ...) <-> (z1, z2, ...)
Eigen::VectorXd realify(const Eigen::VectorXcd& z);
Eigen::VectorXcd complexify(const Eigen::VectorXd& v);

}  // namespace morseflow
