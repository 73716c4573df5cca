#include "morseflow/spectra.hpp"

#include "morseflow/nullspace.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <tuple>

namespace morseflow {

std::vector<std::string> Space::variable_names() const {
  std::vector<std::string> names;
  for (int k = 1; k <= homogeneous_dim(); ++k) {
    if (is_complex()) {
      names.push_back("x" + std::to_string(k));
      names.push_back("y" + std::to_string(k));
    } else {
      names.push_back("x" + std::to_string(k));
    }
  }
  return names;
}

Eigen::VectorXd realify(const Eigen::VectorXcd& z) {
  Eigen::VectorXd v(2 * z.size());
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    v(2 * k) = z(k).real();
    v(2 * k + 1) = z(k).imag();
  }
  return v;
}

Eigen::VectorXcd complexify(const Eigen::VectorXd& v) {
  if (v.size() % 2 != 0) throw std::invalid_argument("odd-length vector cannot be complexified");
  Eigen::VectorXcd z(v.size() / 2);
  for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = {v(2 * k), v(2 * k + 1)};
  return z;
}

double eigenvalue(const Space& space, int j) {
  if (j < 0) throw std::invalid_argument("eigenvalue level must be non-negative");
  const double jj = j, n = space.n();
  return space.is_complex() ? 4.0 * jj * (n + jj) : 2.0 * jj * (2.0 * jj + n - 1.0);
}

namespace {

// Gamma(k/2) for k >= 1.
double gamma_half(int k) {
  static const std::vector<double> table = [] {
    std::vector<double> t(342, 0.0);
    for (int i = 1; i < static_cast<int>(t.size()); ++i) t[i] = std::tgamma(0.5 * i);
    return t;
  }();
  if (k < static_cast<int>(table.size())) return table[k];
  return std::exp(std::lgamma(0.5 * k));
}

double log_gamma_half(int k) { return std::lgamma(0.5 * k); }

Polynomial var(const std::vector<std::string>& names, int k) { return Polynomial::variable(names, k); }

// (x_k + i y_k)^a (x_k - i y_k)^b summed into a product over k.
ComplexPolynomial z_monomial(const Space& space, const Monomial& alpha, const Monomial& beta) {
  const auto names = space.variable_names();
  ComplexPolynomial p = ComplexPolynomial::constant(names, 1.0);
  const std::complex<double> I(0.0, 1.0);
  for (int k = 0; k < space.homogeneous_dim(); ++k) {
    ComplexPolynomial x = to_complex(var(names, 2 * k));
    ComplexPolynomial y = to_complex(var(names, 2 * k + 1));
    ComplexPolynomial z = x + I * y;
    ComplexPolynomial zbar = x - I * y;
    for (int e = 0; e < alpha[k]; ++e) p = p * z;
    for (int e = 0; e < beta[k]; ++e) p = p * zbar;
  }
  return p;
}

// Harmonicity as an integer linear system over a candidate spanning set of
// degree-2j U(1)-invariant (complex) or even (real) polynomials.
struct HarmonicSystem {
  std::vector<IntegerRow> rows;
  int cols = 0;
  std::vector<Polynomial> candidates;
};

HarmonicSystem real_system(const Space& space, int j) {
  const int m = space.ambient_real_dim();
  const auto names = space.variable_names();
  const auto top = monomials_of_degree(m, 2 * j);
  const auto low = monomials_of_degree(m, 2 * j - 2);
  std::map<Monomial, int> low_index;
  for (std::size_t r = 0; r < low.size(); ++r) low_index[low[r]] = static_cast<int>(r);

  HarmonicSystem sys;
  sys.cols = static_cast<int>(top.size());
  sys.rows.assign(low.size(), IntegerRow(top.size(), 0));
  for (std::size_t c = 0; c < top.size(); ++c) {
    for (int k = 0; k < m; ++k) {
      if (top[c][k] < 2) continue;
      Monomial d = top[c];
      d[k] -= 2;
      sys.rows[low_index.at(d)][c] += static_cast<std::int64_t>(top[c][k]) * (top[c][k] - 1);
    }
    Polynomial p(names);
    p.add_term(top[c], 1.0);
    sys.candidates.push_back(std::move(p));
  }
  return sys;
}

// Candidates Re(z^a zbar^b) (a <= b) and Im(z^a zbar^b) (a < b) with |a| = |b| = j.
// The Laplacian 4 sum_k d_zk d_zbark maps them onto the same family at j-1.
HarmonicSystem complex_system(const Space& space, int j) {
  const int h = space.homogeneous_dim();
  const auto top = monomials_of_degree(h, j);
  const auto low = monomials_of_degree(h, j - 1);
  std::map<Monomial, int> low_pos;
  for (std::size_t r = 0; r < low.size(); ++r) low_pos[low[r]] = static_cast<int>(r);

  enum Part { Re, Im };
  using Key = std::tuple<Part, int, int>;
  std::map<Key, int> low_row;
  for (int a = 0; a < static_cast<int>(low.size()); ++a)
    for (int b = a; b < static_cast<int>(low.size()); ++b) {
      low_row.emplace(Key{Re, a, b}, static_cast<int>(low_row.size()));
      if (a < b) low_row.emplace(Key{Im, a, b}, static_cast<int>(low_row.size()));
    }

  std::vector<Key> cols;
  for (int a = 0; a < static_cast<int>(top.size()); ++a)
    for (int b = a; b < static_cast<int>(top.size()); ++b) {
      cols.push_back({Re, a, b});
      if (a < b) cols.push_back({Im, a, b});
    }

  HarmonicSystem sys;
  sys.cols = static_cast<int>(cols.size());
  sys.rows.assign(low_row.size(), IntegerRow(cols.size(), 0));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const auto [part, a, b] = cols[c];
    for (int k = 0; k < h; ++k) {
      if (top[a][k] == 0 || top[b][k] == 0) continue;
      Monomial da = top[a], db = top[b];
      --da[k];
      --db[k];
      int ia = low_pos.at(da), ib = low_pos.at(db);
      std::int64_t coef = 4LL * top[a][k] * top[b][k];
      if (part == Re) {
        if (ia > ib) std::swap(ia, ib);
        sys.rows[low_row.at({Re, ia, ib})][c] += coef;
      } else {
        if (ia == ib) continue;
        if (ia > ib) {
          std::swap(ia, ib);
          coef = -coef;
        }
        sys.rows[low_row.at({Im, ia, ib})][c] += coef;
      }
    }
    const ComplexPolynomial zm = z_monomial(space, top[a], top[b]);
    sys.candidates.push_back(part == Re ? real_part(zm) : imag_part(zm));
  }
  return sys;
}

void finalize(HarmonicBasis& basis) {
  const Space& space = basis.space;
  const auto d = basis.primitive.size();
  basis.elements.clear();
  basis.norms.clear();
  for (const auto& p : basis.primitive) {
    const double nrm = l2_norm(p, space);
    if (!(nrm > 0.0)) throw std::runtime_error("harmonic basis produced a zero element");
    basis.norms.push_back(nrm);
    basis.elements.push_back(p * (1.0 / nrm));
  }
  basis.gram.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a; b < d; ++b) {
      const double g = l2_inner_product(basis.elements[a], basis.elements[b], space);
      basis.gram(a, b) = g;
      basis.gram(b, a) = g;
    }
  if (d == 0) return;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(basis.gram, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  if (!(ev(0) > 1e-10 * ev(ev.size() - 1)))
    throw std::runtime_error("harmonic basis is not certified linearly independent");
}

}  // namespace

std::vector<Polynomial> first_level_coordinate_basis(const Space& space) {
  const auto names = space.variable_names();
  const int h = space.homogeneous_dim();
  std::vector<Polynomial> out;
  if (!space.is_complex()) {
    for (int i = 0; i < h; ++i)
      for (int k = i + 1; k < h; ++k) out.push_back(2.0 * (var(names, i) * var(names, k)));
    const Polynomial last = var(names, h - 1) * var(names, h - 1);
    for (int i = 0; i + 1 < h; ++i) out.push_back(var(names, i) * var(names, i) - last);
    return out;
  }
  auto x = [&](int k) { return var(names, 2 * k); };
  auto y = [&](int k) { return var(names, 2 * k + 1); };
  for (int i = 0; i < h; ++i)
    for (int k = i + 1; k < h; ++k) out.push_back(2.0 * (x(i) * x(k) + y(i) * y(k)));
  for (int i = 0; i < h; ++i)
    for (int k = i + 1; k < h; ++k) out.push_back(2.0 * (x(i) * y(k) - y(i) * x(k)));
  const Polynomial last = x(h - 1) * x(h - 1) + y(h - 1) * y(h - 1);
  for (int i = 0; i + 1 < h; ++i) out.push_back(x(i) * x(i) + y(i) * y(i) - last);
  return out;
}

HarmonicBasis harmonic_basis(const Space& space, int j, NullSpaceMethod method) {
  if (j < 1) throw std::invalid_argument("harmonic_basis requires level >= 1");
  HarmonicBasis basis{space, j, {}, {}, {}, {}, true};

  if (j == 1) {
    basis.primitive = first_level_coordinate_basis(space);
    finalize(basis);
    return basis;
  }

  HarmonicSystem sys = space.is_complex() ? complex_system(space, j) : real_system(space, j);
  const auto names = space.variable_names();

  auto use_floating = [&] {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(sys.rows.size()), sys.cols);
    for (std::size_t r = 0; r < sys.rows.size(); ++r)
      for (int c = 0; c < sys.cols; ++c) m(static_cast<Eigen::Index>(r), c) = static_cast<double>(sys.rows[r][c]);
    const Eigen::MatrixXd ns = floating_nullspace(m);
    basis.exact = false;
    for (Eigen::Index k = 0; k < ns.cols(); ++k) {
      Polynomial p(names);
      for (int c = 0; c < sys.cols; ++c)
        if (ns(c, k) != 0.0) p += sys.candidates[c] * ns(c, k);
      basis.primitive.push_back(std::move(p));
    }
  };

  if (method == NullSpaceMethod::Floating) {
    use_floating();
  } else {
    try {
      for (const auto& v : exact_integer_nullspace(sys.rows, sys.cols)) {
        Polynomial p(names);
        for (int c = 0; c < sys.cols; ++c)
          if (v[c] != 0) p += sys.candidates[c] * static_cast<double>(v[c]);
        basis.primitive.push_back(std::move(p));
      }
    } catch (const std::overflow_error&) {
      basis.primitive.clear();
      use_floating();
    }
  }
  finalize(basis);
  return basis;
}

std::shared_ptr<const HarmonicBasis> level_basis(const Space& space, int j) {
  if (j < 0) throw std::invalid_argument("level must be non-negative");
  static std::mutex mu;
  static std::map<std::tuple<int, int, int>, std::shared_ptr<const HarmonicBasis>> cache;
  const auto key = std::make_tuple(static_cast<int>(space.kind()), space.n(), j);
  std::lock_guard lock(mu);
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  std::shared_ptr<const HarmonicBasis> b;
  if (j == 0) {
    HarmonicBasis c{space, 0, {}, {}, {}, {}, true};
    c.primitive.push_back(Polynomial::constant(space.variable_names(), 1.0));
    finalize(c);
    b = std::make_shared<const HarmonicBasis>(std::move(c));
  } else {
    b = std::make_shared<const HarmonicBasis>(harmonic_basis(space, j));
  }
  cache.emplace(key, b);
  return b;
}

int eigenspace_dimension(const Space& space, int j) {
  if (j < 0) throw std::invalid_argument("level must be non-negative");
  const int n = space.n();
  if (j == 0) return 1;
  if (j == 1) return space.is_complex() ? n * (n + 2) : (n * n + 3 * n) / 2;
  return level_basis(space, j)->size();
}

Polynomial ambient_laplacian(const Polynomial& p) { return p.laplacian(); }

Polynomial phase_generator(const Polynomial& p) {
  if (p.num_variables() % 2 != 0) throw std::invalid_argument("phase generator needs interleaved complex coordinates");
  const auto& names = p.variables();
  Polynomial out(names);
  for (std::size_t k = 0; k < p.num_variables(); k += 2) {
    out += Polynomial::variable(names, k) * p.derivative(k + 1);
    out -= Polynomial::variable(names, k + 1) * p.derivative(k);
  }
  return out;
}

double monomial_sphere_integral(std::span<const int> alpha) {
  int sum = 0;
  for (int a : alpha) {
    if (a < 0) throw std::invalid_argument("negative exponent");
    if (a % 2 != 0) return 0.0;
    sum += a + 1;
  }
  if (alpha.empty()) return 0.0;
  // 2 prod Gamma((a_i+1)/2) / Gamma(sum (a_i+1)/2)
  if (sum < 340) {
    double r = 2.0 / gamma_half(sum);
    for (int a : alpha) r *= gamma_half(a + 1);
    return r;
  }
  double lr = std::log(2.0) - log_gamma_half(sum);
  for (int a : alpha) lr += log_gamma_half(a + 1);
  return std::exp(lr);
}

double sphere_area(int m) {
  std::vector<int> zero(static_cast<std::size_t>(m), 0);
  return monomial_sphere_integral(zero);
}

double l2_inner_product(const Polynomial& p, const Polynomial& q, const Space& space) {
  const auto m = static_cast<std::size_t>(space.ambient_real_dim());
  if (p.num_variables() != m || q.num_variables() != m)
    throw std::invalid_argument("polynomial arity does not match the ambient space");
  double s = 0.0;
  Monomial sum(m);
  for (const auto& [a, ca] : p.terms()) {
    for (const auto& [b, cb] : q.terms()) {
      bool odd = false;
      for (std::size_t k = 0; k < m; ++k) {
        sum[k] = a[k] + b[k];
        odd = odd || (sum[k] % 2 != 0);
      }
      if (odd) continue;
      s += ca * cb * monomial_sphere_integral(sum);
    }
  }
  return s;
}

double l2_norm(const Polynomial& p, const Space& space) { return std::sqrt(std::max(0.0, l2_inner_product(p, p, space))); }

}  // namespace morseflow
