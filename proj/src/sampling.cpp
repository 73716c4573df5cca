#include "morseflow/sampling.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <stdexcept>

namespace morseflow {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::array<int, 16> kPrimes = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

double gaussian_quantile(double u) {
  u = std::clamp(u, 1e-16, 1.0 - 1e-16);
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u);
}

void normalize_columns(Eigen::MatrixXd& pts) {
  for (Eigen::Index c = 0; c < pts.cols(); ++c) {
    const double nrm = pts.col(c).norm();
    if (nrm > 0.0) pts.col(c) /= nrm;
    else {
      pts.col(c).setZero();
      pts(0, c) = 1.0;
    }
  }
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t seed, std::string_view stream) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char ch : stream) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return splitmix64(seed ^ splitmix64(h));
}

double radical_inverse(std::uint64_t i, int base) {
  const double inv = 1.0 / base;
  double f = inv, r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % static_cast<std::uint64_t>(base));
    i /= static_cast<std::uint64_t>(base);
    f *= inv;
  }
  return r;
}

Eigen::MatrixXd quasi_uniform_sphere(int m, int count, std::uint64_t seed) {
  if (m < 1 || m > static_cast<int>(kPrimes.size())) throw std::invalid_argument("unsupported sphere dimension");
  if (count < 0) throw std::invalid_argument("negative sample count");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::array<double, kPrimes.size()> shift{};
  for (int k = 0; k < m; ++k) shift[k] = unif(rng);

  Eigen::MatrixXd pts(m, count);
  for (int i = 0; i < count; ++i) {
    for (int k = 0; k < m; ++k) {
      double u = radical_inverse(static_cast<std::uint64_t>(i) + 1, kPrimes[k]) + shift[k];
      u -= std::floor(u);
      pts(k, i) = gaussian_quantile(u);
    }
  }
  normalize_columns(pts);
  return pts;
}

Eigen::MatrixXd uniform_sphere(int m, int count, std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("unsupported sphere dimension");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd pts(m, count);
  for (int i = 0; i < count; ++i)
    for (int k = 0; k < m; ++k) pts(k, i) = normal(rng);
  normalize_columns(pts);
  return pts;
}

}  // namespace morseflow
