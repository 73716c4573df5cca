#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string_view>

namespace morseflow {

/// Derives an independent seed for a named stream ("oracle", "sup_norm", ...)
/// from the experiment seed.
std::uint64_t stream_seed(std::uint64_t seed, std::string_view stream);

/// Randomly shifted Halton points pushed to S^{m-1} through the Gaussian
/// quantile. Points are the columns of the returned m x count matrix.
Eigen::MatrixXd quasi_uniform_sphere(int m, int count, std::uint64_t seed);

/// Independent uniform points on S^{m-1} (columns), for Monte Carlo quadrature.
Eigen::MatrixXd uniform_sphere(int m, int count, std::uint64_t seed);

/// Radical inverse of i in the given base.
double radical_inverse(std::uint64_t i, int base);

}  // namespace morseflow
