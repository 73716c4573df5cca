#pragma once

// Reference computations for the tests. Nothing here calls into the code
// under test beyond evaluating polynomials.

#include "morseflow/morse.hpp"
#include "morseflow/polynomial.hpp"
#include "morseflow/space.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <random>
#include <vector>

namespace testing_support {

inline long long binom(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// Harmonic polynomials of degree 2j in n+1 variables (real) or of bidegree
/// (j, j) in n+1 complex variables.
inline long long expected_dimension(const morseflow::Space& s, int j) {
  const int n = s.n();
  if (j == 0) return 1;
  if (s.is_complex()) {
    const long long a = binom(n + j, n), b = binom(n + j - 1, n);
    return a * a - b * b;
  }
  return binom(n + 2 * j, n) - binom(n + 2 * j - 2, n);
}

inline Eigen::MatrixXd gaussian(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = nd(rng);
  return m;
}

inline Eigen::MatrixXcd complex_gaussian(std::mt19937_64& rng, int rows, int cols) {
  return gaussian(rng, rows, cols).cast<std::complex<double>>() +
         std::complex<double>(0.0, 1.0) * gaussian(rng, rows, cols).cast<std::complex<double>>();
}

inline Eigen::MatrixXd random_orthogonal(std::mt19937_64& rng, int h) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian(rng, h, h));
  return qr.householderQ() * Eigen::MatrixXd::Identity(h, h);
}

inline Eigen::MatrixXcd random_unitary(std::mt19937_64& rng, int h) {
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(complex_gaussian(rng, h, h));
  return qr.householderQ() * Eigen::MatrixXcd::Identity(h, h);
}

/// Random traceless symmetric/Hermitian matrix (GOE/GUE draw, trace removed).
inline morseflow::CoefficientMatrix random_traceless(std::mt19937_64& rng, const morseflow::Space& s) {
  const int h = s.homogeneous_dim();
  if (s.is_complex()) {
    Eigen::MatrixXcd g = complex_gaussian(rng, h, h);
    Eigen::MatrixXcd a = 0.5 * (g + g.adjoint());
    a -= (a.trace() / static_cast<double>(h)) * Eigen::MatrixXcd::Identity(h, h);
    return morseflow::CoefficientMatrix::hermitian(a);
  }
  Eigen::MatrixXd g = gaussian(rng, h, h);
  Eigen::MatrixXd a = 0.5 * (g + g.transpose());
  a -= (a.trace() / h) * Eigen::MatrixXd::Identity(h, h);
  return morseflow::CoefficientMatrix::symmetric(a);
}

inline double min_gap(Eigen::VectorXd ev) {
  std::sort(ev.data(), ev.data() + ev.size());
  double g = INFINITY;
  for (Eigen::Index k = 1; k < ev.size(); ++k) g = std::min(g, ev(k) - ev(k - 1));
  return g;
}

/// Eigenvalues straight from Eigen, for comparison with the library.
inline Eigen::VectorXd eigenvalues_of(const morseflow::CoefficientMatrix& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a.entries(), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

/// Random traceless matrix with eigenvalue gaps above `margin`, by rejection.
inline morseflow::CoefficientMatrix random_stable(std::mt19937_64& rng, const morseflow::Space& s, double margin) {
  for (;;) {
    auto a = random_traceless(rng, s);
    if (min_gap(eigenvalues_of(a)) > margin) return a;
  }
}

/// Q diag(lambda) Q^*, lambda with lambda[k] == lambda[k+1] for one k.
inline morseflow::CoefficientMatrix random_repeated(std::mt19937_64& rng, const morseflow::Space& s) {
  const int h = s.homogeneous_dim();
  std::normal_distribution<double> nd;
  std::uniform_int_distribution<int> pick(0, h - 2);
  Eigen::VectorXd lam(h);
  for (int k = 0; k < h; ++k) lam(k) = nd(rng);
  const int k = pick(rng);
  lam(k + 1) = lam(k);
  lam.array() -= lam.mean();
  if (s.is_complex()) {
    const Eigen::MatrixXcd q = random_unitary(rng, h);
    return morseflow::CoefficientMatrix::hermitian(q * lam.cast<std::complex<double>>().asDiagonal() * q.adjoint());
  }
  const Eigen::MatrixXd q = random_orthogonal(rng, h);
  return morseflow::CoefficientMatrix::symmetric(q * lam.asDiagonal() * q.transpose());
}

/// Laplacian on the unit sphere of F at unit x, as the flat Laplacian of
/// F(x / |x|) by central differences.
inline double fd_sphere_laplacian(const morseflow::Polynomial& f, const Eigen::VectorXd& x, double h = 1e-3) {
  auto g = [&](const Eigen::VectorXd& y) {
    const Eigen::VectorXd u = y / y.norm();
    return f.evaluate(std::span<const double>(u.data(), static_cast<std::size_t>(u.size())));
  };
  double lap = 0.0;
  const double g0 = g(x);
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(x.size());
    e(k) = h;
    lap += (g(x + e) - 2.0 * g0 + g(x - e)) / (h * h);
  }
  return lap;
}

inline double eval(const morseflow::Polynomial& f, const Eigen::VectorXd& x) {
  return f.evaluate(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

/// Gaussian point normalized onto the unit sphere.
inline Eigen::VectorXd random_unit(std::mt19937_64& rng, int m) {
  Eigen::VectorXd v = gaussian(rng, m, 1);
  return v / v.norm();
}

/// Ordinary least squares slope of y against x.
inline double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  return sxy / sxx;
}

/// sin of the angle between the lines through unit vectors a and b; on CP^n
/// the vectors hold (Re, Im) pairs and the Hermitian product is used.
inline double line_distance(const morseflow::Space& s, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double overlap;
  if (s.is_complex()) {
    std::complex<double> dot = 0.0;
    for (Eigen::Index k = 0; k < a.size() / 2; ++k)
      dot += std::complex<double>(a(2 * k), -a(2 * k + 1)) * std::complex<double>(b(2 * k), b(2 * k + 1));
    overlap = std::abs(dot);
  } else {
    overlap = std::abs(a.dot(b));
  }
  return std::sqrt(std::max(0.0, 1.0 - overlap * overlap));
}

/// Index of the point in `candidates` closest to the line through x.
template <typename Points, typename Loc>
std::size_t nearest(const morseflow::Space& s, const Points& candidates, const Eigen::VectorXd& x, Loc loc) {
  std::size_t best = 0;
  double d = INFINITY;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double di = line_distance(s, loc(candidates[i]), x);
    if (di < d) {
      d = di;
      best = i;
    }
  }
  return best;
}

}  // namespace testing_support
