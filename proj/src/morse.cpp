#include "morseflow/morse.hpp"

#include "morseflow/spectra.hpp"
#include "morseflow/sphere_function.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace morseflow {

namespace {

double max_abs_entry(const Eigen::MatrixXcd& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

void check_size(const CoefficientMatrix& a, const Space& space) {
  if (a.size() != space.homogeneous_dim()) throw std::invalid_argument("matrix size does not match n+1");
}

}  // namespace

CoefficientMatrix CoefficientMatrix::symmetric(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols() || a.rows() == 0) throw std::invalid_argument("coefficient matrix must be square and non-empty");
  if (!a.allFinite()) throw std::invalid_argument("coefficient matrix has non-finite entries");
  const double tol = 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > tol) throw std::invalid_argument("matrix is not symmetric");
  Eigen::MatrixXd s = 0.5 * (a + a.transpose());
  return {SymmetryKind::Symmetric, s.cast<std::complex<double>>()};
}

CoefficientMatrix CoefficientMatrix::hermitian(const Eigen::MatrixXcd& a) {
  if (a.rows() != a.cols() || a.rows() == 0) throw std::invalid_argument("coefficient matrix must be square and non-empty");
  if (!a.allFinite()) throw std::invalid_argument("coefficient matrix has non-finite entries");
  const double tol = 1e-12 * std::max(1.0, max_abs_entry(a));
  if ((a - a.adjoint()).cwiseAbs().maxCoeff() > tol) throw std::invalid_argument("matrix is not Hermitian");
  Eigen::MatrixXcd h = 0.5 * (a + a.adjoint());
  return {SymmetryKind::Hermitian, std::move(h)};
}

bool CoefficientMatrix::is_traceless(double tol) const { return std::abs(trace()) <= tol; }

double CoefficientMatrix::operator_norm() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(entries_, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

CoefficientMatrix CoefficientMatrix::operator+(const CoefficientMatrix& e) const {
  if (e.kind_ != kind_ || e.size() != size()) throw std::invalid_argument("incompatible coefficient matrices");
  return {kind_, entries_ + e.entries_};
}

CoefficientMatrix CoefficientMatrix::operator*(double s) const { return {kind_, entries_ * s}; }

SpectralDecomposition spectral_decomposition(const CoefficientMatrix& a) {
  SpectralDecomposition d;
  if (a.kind() == SymmetryKind::Symmetric) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.real_entries());
    d.eigenvalues = es.eigenvalues();
    d.frame = es.eigenvectors().cast<std::complex<double>>();
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a.entries());
    d.eigenvalues = es.eigenvalues();
    d.frame = es.eigenvectors();
  }
  return d;
}

double default_gap_tol(const CoefficientMatrix& a) { return 1e-9 * (1.0 + a.operator_norm()); }

double stability_margin(const CoefficientMatrix& a) {
  const Eigen::VectorXd ev = spectral_decomposition(a).eigenvalues;
  double m = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k + 1 < ev.size(); ++k) m = std::min(m, ev(k + 1) - ev(k));
  return ev.size() < 2 ? 0.0 : std::max(0.0, m);
}

namespace {

MorseReport analyze_impl(const CoefficientMatrix& a, const Space& space, std::optional<double> gap_tol) {
  check_size(a, space);
  const SpectralDecomposition sd = spectral_decomposition(a);
  const Eigen::VectorXd& lam = sd.eigenvalues;
  const int h = space.homogeneous_dim();
  const int mult = space.is_complex() ? 2 : 1;

  MorseReport r{space, false, false, false, false, {}, stability_margin(a), gap_tol.value_or(default_gap_tol(a)), lam, {}};

  // Group eigenvalues into clusters of consecutive near-equal values.
  std::vector<int> cluster(static_cast<std::size_t>(h), 0);
  for (int k = 1; k < h; ++k) cluster[k] = cluster[k - 1] + ((lam(k) - lam(k - 1) > r.gap_tol) ? 1 : 0);
  for (int c = 0; c <= cluster[h - 1]; ++c) {
    std::vector<int> members;
    for (int k = 0; k < h; ++k)
      if (cluster[k] == c) members.push_back(k);
    if (members.size() > 1) r.degenerate_levels.push_back(std::move(members));
  }
  const bool simple = r.degenerate_levels.empty();

  for (int i = 0; i < h; ++i) {
    const bool isolated = (i == 0 || cluster[i] != cluster[i - 1]) && (i == h - 1 || cluster[i] != cluster[i + 1]);
    if (!isolated) continue;
    CriticalPoint cp;
    // Under the z_i conj(z_j) convention the critical lines are the conjugated eigenvectors.
    const Eigen::VectorXcd v = sd.frame.col(i);
    const Eigen::VectorXd amb = space.is_complex() ? realify(v.conjugate()) : Eigen::VectorXd(v.real());
    cp.location = canonical_representative(space, amb);
    cp.value = lam(i);
    cp.chart = dominant_coordinate(space, cp.location);
    std::vector<double> hess;
    double det = 1.0;
    for (int j = 0; j < h; ++j) {
      if (j == i) continue;
      const double e = 2.0 * (lam(j) - lam(i));
      for (int k = 0; k < mult; ++k) {
        hess.push_back(e);
        det *= e;
      }
      if (lam(j) < lam(i)) cp.morse_index += mult;
    }
    std::sort(hess.begin(), hess.end());
    cp.hessian_eigenvalues = Eigen::Map<Eigen::VectorXd>(hess.data(), static_cast<Eigen::Index>(hess.size()));
    cp.hessian_determinant = det;
    r.critical_points.push_back(std::move(cp));
  }

  r.is_morse = simple;
  r.has_distinct_values = simple;
  r.is_minimal = simple && static_cast<int>(r.critical_points.size()) == space.morse_smale_characteristic();
  r.is_stable = r.is_morse && r.has_distinct_values;
  return r;
}

}  // namespace

MorseReport analyze_real(const CoefficientMatrix& a, const Space& space, std::optional<double> gap_tol) {
  if (space.is_complex()) throw std::invalid_argument("analyze_real needs a real projective space");
  if (a.kind() != SymmetryKind::Symmetric) throw std::invalid_argument("analyze_real needs a symmetric matrix");
  return analyze_impl(a, space, gap_tol);
}

MorseReport analyze_complex(const CoefficientMatrix& a, const Space& space, std::optional<double> gap_tol) {
  if (!space.is_complex()) throw std::invalid_argument("analyze_complex needs a complex projective space");
  if (a.kind() != SymmetryKind::Hermitian) throw std::invalid_argument("analyze_complex needs a Hermitian matrix");
  return analyze_impl(a, space, gap_tol);
}

MorseReport analyze(const CoefficientMatrix& a, const Space& space, std::optional<double> gap_tol) {
  return space.is_complex() ? analyze_complex(a, space, gap_tol) : analyze_real(a, space, gap_tol);
}

CoefficientMatrix coeffs_to_matrix(const Eigen::VectorXd& coeffs, const Space& space) {
  if (coeffs.size() != eigenspace_dimension(space, 1)) throw std::invalid_argument("coefficient vector has wrong length");
  const int h = space.homogeneous_dim();
  Eigen::Index k = 0;
  if (!space.is_complex()) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(h, h);
    for (int i = 0; i < h; ++i)
      for (int j = i + 1; j < h; ++j) a(i, j) = a(j, i) = coeffs(k++);
    for (int i = 0; i + 1 < h; ++i) {
      a(i, i) = coeffs(k++);
      a(h - 1, h - 1) -= a(i, i);
    }
    return CoefficientMatrix::symmetric(a);
  }
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(h, h);
  for (int i = 0; i < h; ++i)
    for (int j = i + 1; j < h; ++j) a(i, j) = coeffs(k++);
  for (int i = 0; i < h; ++i)
    for (int j = i + 1; j < h; ++j) a(i, j) += std::complex<double>(0.0, coeffs(k++));
  for (int i = 0; i < h; ++i)
    for (int j = i + 1; j < h; ++j) a(j, i) = std::conj(a(i, j));
  for (int i = 0; i + 1 < h; ++i) {
    a(i, i) = coeffs(k++);
    a(h - 1, h - 1) -= a(i, i);
  }
  return CoefficientMatrix::hermitian(a);
}

Eigen::VectorXd matrix_to_coeffs(const CoefficientMatrix& a, const Space& space) {
  check_size(a, space);
  if ((a.kind() == SymmetryKind::Hermitian) != space.is_complex()) throw std::invalid_argument("matrix kind does not match space");
  const double tol = 1e-12 * std::max(1.0, max_abs_entry(a.entries()));
  if (!a.is_traceless(tol)) throw std::invalid_argument("matrix is not traceless; the function is not a first eigenfunction");
  const int h = space.homogeneous_dim();
  const auto& e = a.entries();
  Eigen::VectorXd c(eigenspace_dimension(space, 1));
  Eigen::Index k = 0;
  for (int i = 0; i < h; ++i)
    for (int j = i + 1; j < h; ++j) c(k++) = e(i, j).real();
  if (space.is_complex())
    for (int i = 0; i < h; ++i)
      for (int j = i + 1; j < h; ++j) c(k++) = e(i, j).imag();
  for (int i = 0; i + 1 < h; ++i) c(k++) = e(i, i).real();
  return c;
}

Polynomial quadratic_form_polynomial(const CoefficientMatrix& a, const Space& space) {
  check_size(a, space);
  const int h = space.homogeneous_dim();
  const auto& e = a.entries();
  const auto names = space.variable_names();
  Polynomial p(names);
  const int m = space.ambient_real_dim();
  auto add2 = [&](int u, int v, double c) {
    Monomial mono(static_cast<std::size_t>(m), 0);
    mono[u] += 1;
    mono[v] += 1;
    p.add_term(mono, c);
  };
  if (!space.is_complex()) {
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < h; ++j) add2(i, j, e(i, j).real());
    return p;
  }
  // a_ij z_i conj(z_j) summed: b_ij (x_i x_j + y_i y_j) + c_ij (x_i y_j - y_i x_j)
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < h; ++j) {
      const double b = e(i, j).real(), c = e(i, j).imag();
      add2(2 * i, 2 * j, b);
      add2(2 * i + 1, 2 * j + 1, b);
      add2(2 * i, 2 * j + 1, c);
      add2(2 * i + 1, 2 * j, -c);
    }
  return p;
}

CoefficientMatrix matrix_from_quadratic(const Polynomial& p, const Space& space) {
  const int m = space.ambient_real_dim();
  const int h = space.homogeneous_dim();
  if (static_cast<int>(p.num_variables()) != m) throw std::invalid_argument("polynomial arity does not match the ambient space");
  for (const auto& [mono, c] : p.terms())
    if (Polynomial::total_degree(mono) != 2) throw std::invalid_argument("polynomial is not a quadratic form");
  auto coef = [&](int u, int v) {
    Monomial mono(static_cast<std::size_t>(m), 0);
    mono[u] += 1;
    mono[v] += 1;
    return p.coefficient(mono);
  };
  if (!space.is_complex()) {
    Eigen::MatrixXd a(h, h);
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < h; ++j) a(i, j) = (i == j) ? coef(i, i) : 0.5 * coef(i, j);
    return CoefficientMatrix::symmetric(a);
  }
  const double tol = 1e-10 * std::max(1.0, coefficient_l1_norm(p));
  Eigen::MatrixXcd a(h, h);
  for (int i = 0; i < h; ++i) {
    const double xx = coef(2 * i, 2 * i), yy = coef(2 * i + 1, 2 * i + 1), xy = coef(2 * i, 2 * i + 1);
    if (std::abs(xx - yy) > tol || std::abs(xy) > tol) throw std::invalid_argument("quadratic form is not phase invariant");
    a(i, i) = 0.5 * (xx + yy);
    for (int j = i + 1; j < h; ++j) {
      const double b1 = 0.5 * coef(2 * i, 2 * j), b2 = 0.5 * coef(2 * i + 1, 2 * j + 1);
      const double c1 = 0.5 * coef(2 * i, 2 * j + 1), c2 = -0.5 * coef(2 * i + 1, 2 * j);
      if (std::abs(b1 - b2) > tol || std::abs(c1 - c2) > tol) throw std::invalid_argument("quadratic form is not phase invariant");
      a(i, j) = {0.5 * (b1 + b2), 0.5 * (c1 + c2)};
      a(j, i) = std::conj(a(i, j));
    }
  }
  return CoefficientMatrix::hermitian(a);
}

CoefficientMatrix perturb_to_distinct(const CoefficientMatrix& a, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  const int h = a.size();
  if (h < 2) return a;
  const double spacing = 2.0 * epsilon / (h - 1);
  if (stability_margin(a) >= spacing) return a;

  const SpectralDecomposition sd = spectral_decomposition(a);
  Eigen::VectorXd offsets(h);
  for (int i = 0; i < h; ++i) offsets(i) = epsilon * (2.0 * i - (h - 1)) / (h - 1);
  // A + V diag(offsets) V^*: eigenvalues lambda_i + offset_i in ascending order.
  const Eigen::MatrixXcd delta = sd.frame * offsets.cast<std::complex<double>>().asDiagonal() * sd.frame.adjoint();
  Eigen::MatrixXcd out = a.entries() + delta;
  if (a.kind() == SymmetryKind::Symmetric) return CoefficientMatrix::symmetric(out.real());
  return CoefficientMatrix::hermitian(0.5 * (out + out.adjoint()));
}

}  // namespace morseflow
