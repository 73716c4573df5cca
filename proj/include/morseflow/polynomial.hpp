#pragma once

#include <algorithm>
#include <complex>
#include <cstddef>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace morseflow {

/// Exponent multi-index; one entry per ambient variable.
using Monomial = std::vector<int>;

template <typename Scalar>
class BasicPolynomial {
 public:
  using TermMap = std::map<Monomial, Scalar>;

  BasicPolynomial() = default;
  explicit BasicPolynomial(std::vector<std::string> variables) : variables_(std::move(variables)) {}

  static BasicPolynomial constant(std::vector<std::string> variables, Scalar c) {
    BasicPolynomial p(std::move(variables));
    p.add_term(Monomial(p.num_variables(), 0), c);
    return p;
  }

  static BasicPolynomial variable(std::vector<std::string> variables, std::size_t k) {
    BasicPolynomial p(std::move(variables));
    if (k >= p.num_variables()) throw std::out_of_range("variable index out of range");
    Monomial m(p.num_variables(), 0);
    m[k] = 1;
    p.add_term(std::move(m), Scalar(1));
    return p;
  }

  const std::vector<std::string>& variables() const { return variables_; }
  std::size_t num_variables() const { return variables_.size(); }
  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  /// Accumulates c into the coefficient of m; exact zeros are never stored.
  void add_term(const Monomial& m, Scalar c) {
    if (m.size() != num_variables()) throw std::invalid_argument("monomial arity does not match variable count");
    for (int e : m)
      if (e < 0) throw std::invalid_argument("negative exponent");
    if (c == Scalar(0)) return;
    auto [it, inserted] = terms_.try_emplace(m, c);
    if (!inserted) {
      it->second += c;
      if (it->second == Scalar(0)) terms_.erase(it);
    }
  }

  Scalar coefficient(const Monomial& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? Scalar(0) : it->second;
  }

  /// Total degree; -1 for the zero polynomial.
  int degree() const {
    int d = -1;
    for (const auto& [m, c] : terms_) d = std::max(d, total_degree(m));
    return d;
  }

  bool is_homogeneous() const {
    int d = -1;
    for (const auto& [m, c] : terms_) {
      int td = total_degree(m);
      if (d < 0) d = td;
      else if (td != d) return false;
    }
    return true;
  }

  std::vector<int> degrees() const {
    std::vector<int> ds;
    for (const auto& [m, c] : terms_) ds.push_back(total_degree(m));
    std::sort(ds.begin(), ds.end());
    ds.erase(std::unique(ds.begin(), ds.end()), ds.end());
    return ds;
  }

  BasicPolynomial homogeneous_part(int d) const {
    BasicPolynomial out(variables_);
    for (const auto& [m, c] : terms_)
      if (total_degree(m) == d) out.terms_.emplace(m, c);
    return out;
  }

  BasicPolynomial derivative(std::size_t k) const {
    if (k >= num_variables()) throw std::out_of_range("variable index out of range");
    BasicPolynomial out(variables_);
    for (const auto& [m, c] : terms_) {
      if (m[k] == 0) continue;
      Monomial dm = m;
      dm[k] -= 1;
      out.add_term(dm, c * Scalar(m[k]));
    }
    return out;
  }

  /// Flat Laplacian sum_k d^2/dx_k^2, computed term by term.
  BasicPolynomial laplacian() const {
    BasicPolynomial out(variables_);
    for (const auto& [m, c] : terms_) {
      for (std::size_t k = 0; k < m.size(); ++k) {
        if (m[k] < 2) continue;
        Monomial dm = m;
        dm[k] -= 2;
        out.add_term(dm, c * Scalar(m[k] * (m[k] - 1)));
      }
    }
    return out;
  }

  template <typename T>
  auto evaluate(std::span<const T> x) const {
    using R = std::common_type_t<Scalar, T>;
    if (x.size() != num_variables()) throw std::invalid_argument("point dimension does not match variable count");
    R sum(0);
    for (const auto& [m, c] : terms_) {
      R term(c);
      for (std::size_t k = 0; k < m.size(); ++k)
        for (int e = 0; e < m[k]; ++e) term *= x[k];
      sum += term;
    }
    return sum;
  }

  BasicPolynomial& operator+=(const BasicPolynomial& o) {
    check_compatible(o);
    for (const auto& [m, c] : o.terms_) add_term(m, c);
    return *this;
  }
  BasicPolynomial& operator-=(const BasicPolynomial& o) {
    check_compatible(o);
    for (const auto& [m, c] : o.terms_) add_term(m, -c);
    return *this;
  }
  BasicPolynomial& operator*=(Scalar s) {
    if (s == Scalar(0)) {
      terms_.clear();
      return *this;
    }
    for (auto it = terms_.begin(); it != terms_.end();) {
      it->second *= s;
      if (it->second == Scalar(0)) it = terms_.erase(it);
      else ++it;
    }
    return *this;
  }

  friend BasicPolynomial operator+(BasicPolynomial a, const BasicPolynomial& b) { return a += b; }
  friend BasicPolynomial operator-(BasicPolynomial a, const BasicPolynomial& b) { return a -= b; }
  friend BasicPolynomial operator*(BasicPolynomial a, Scalar s) { return a *= s; }
  friend BasicPolynomial operator*(Scalar s, BasicPolynomial a) { return a *= s; }

  friend BasicPolynomial operator*(const BasicPolynomial& a, const BasicPolynomial& b) {
    a.check_compatible(b);
    BasicPolynomial out(a.variables_);
    Monomial m(a.num_variables());
    for (const auto& [ma, ca] : a.terms_) {
      for (const auto& [mb, cb] : b.terms_) {
        for (std::size_t k = 0; k < m.size(); ++k) m[k] = ma[k] + mb[k];
        out.add_term(m, ca * cb);
      }
    }
    return out;
  }

  friend bool operator==(const BasicPolynomial& a, const BasicPolynomial& b) {
    return a.variables_ == b.variables_ && a.terms_ == b.terms_;
  }

  static int total_degree(const Monomial& m) { return std::accumulate(m.begin(), m.end(), 0); }

 private:
  void check_compatible(const BasicPolynomial& o) const {
    if (o.variables_ != variables_) throw std::invalid_argument("polynomials over different variable lists");
  }

  std::vector<std::string> variables_;
  TermMap terms_;
};

using Polynomial = BasicPolynomial<double>;
using ComplexPolynomial = BasicPolynomial<std::complex<double>>;

inline Polynomial real_part(const ComplexPolynomial& p) {
  Polynomial out(p.variables());
  for (const auto& [m, c] : p.terms()) out.add_term(m, c.real());
  return out;
}

inline Polynomial imag_part(const ComplexPolynomial& p) {
  Polynomial out(p.variables());
  for (const auto& [m, c] : p.terms()) out.add_term(m, c.imag());
  return out;
}

inline ComplexPolynomial to_complex(const Polynomial& p) {
  ComplexPolynomial out(p.variables());
  for (const auto& [m, c] : p.terms()) out.add_term(m, c);
  return out;
}

/// Sum of |coefficient|; bounds |p| on the closed unit ball.
template <typename Scalar>
double coefficient_l1_norm(const BasicPolynomial<Scalar>& p) {
  double s = 0.0;
  for (const auto& [m, c] : p.terms()) s += std::abs(c);
  return s;
}

/// All exponent vectors of total degree d in nvars variables, in lexicographic descending order.
inline std::vector<Monomial> monomials_of_degree(int nvars, int d) {
  std::vector<Monomial> out;
  Monomial cur(static_cast<std::size_t>(nvars), 0);
  auto rec = [&](auto&& self, int k, int remaining) -> void {
    if (k == nvars - 1) {
      cur[static_cast<std::size_t>(k)] = remaining;
      out.push_back(cur);
      return;
    }
    for (int e = remaining; e >= 0; --e) {
      cur[static_cast<std::size_t>(k)] = e;
      self(self, k + 1, remaining - e);
    }
  };
  if (nvars > 0 && d >= 0) rec(rec, 0, d);
  return out;
}

}  // namespace morseflow
