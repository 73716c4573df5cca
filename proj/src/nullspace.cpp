#include "morseflow/nullspace.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <stdexcept>

namespace morseflow {

namespace mp = boost::multiprecision;

std::vector<IntegerRow> exact_integer_nullspace(const std::vector<IntegerRow>& rows, int cols) {
  const int nrows = static_cast<int>(rows.size());
  std::vector<std::vector<mp::cpp_rational>> m(static_cast<std::size_t>(nrows));
  for (int r = 0; r < nrows; ++r) {
    if (static_cast<int>(rows[r].size()) != cols) throw std::invalid_argument("ragged integer matrix");
    m[r].assign(rows[r].begin(), rows[r].end());
  }

  // Reduced row echelon form.
  std::vector<int> pivot_col;
  int prow = 0;
  for (int c = 0; c < cols && prow < nrows; ++c) {
    int sel = -1;
    for (int r = prow; r < nrows; ++r)
      if (m[r][c] != 0) {
        sel = r;
        break;
      }
    if (sel < 0) continue;
    std::swap(m[prow], m[sel]);
    const mp::cpp_rational piv = m[prow][c];
    for (int k = c; k < cols; ++k) m[prow][k] /= piv;
    for (int r = 0; r < nrows; ++r) {
      if (r == prow || m[r][c] == 0) continue;
      const mp::cpp_rational f = m[r][c];
      for (int k = c; k < cols; ++k) m[r][k] -= f * m[prow][k];
    }
    pivot_col.push_back(c);
    ++prow;
  }

  std::vector<bool> is_pivot(static_cast<std::size_t>(cols), false);
  for (int c : pivot_col) is_pivot[c] = true;

  const mp::cpp_int limit = mp::cpp_int(1) << 53;
  std::vector<IntegerRow> out;
  for (int f = 0; f < cols; ++f) {
    if (is_pivot[f]) continue;
    std::vector<mp::cpp_rational> v(static_cast<std::size_t>(cols), 0);
    v[f] = 1;
    for (std::size_t r = 0; r < pivot_col.size(); ++r) v[pivot_col[r]] = -m[r][f];

    mp::cpp_int den_lcm = 1;
    for (const auto& q : v)
      if (q != 0) den_lcm = mp::lcm(den_lcm, mp::denominator(q));
    std::vector<mp::cpp_int> iv(v.size());
    mp::cpp_int g = 0;
    for (std::size_t k = 0; k < v.size(); ++k) {
      iv[k] = mp::numerator(v[k]) * (den_lcm / mp::denominator(v[k]));
      g = mp::gcd(g, mp::abs(iv[k]));
    }
    int sign = 0;
    for (const auto& x : iv)
      if (x != 0) {
        sign = x > 0 ? 1 : -1;
        break;
      }
    IntegerRow row(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
      mp::cpp_int x = iv[k] / g * sign;
      if (mp::abs(x) > limit) throw std::overflow_error("null-space vector exceeds exact double range");
      row[k] = x.convert_to<std::int64_t>();
    }
    out.push_back(std::move(row));
  }
  return out;
}

Eigen::MatrixXd floating_nullspace(const Eigen::MatrixXd& m, double rel_threshold) {
  const auto cols = m.cols();
  if (m.rows() == 0) return Eigen::MatrixXd::Identity(cols, cols);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double smax = s.size() > 0 ? s(0) : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index k = 0; k < s.size(); ++k)
    if (s(k) > rel_threshold * smax) ++rank;
  return svd.matrixV().rightCols(cols - rank);
}

}  // namespace morseflow
