#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace morseflow {

using IntegerRow = std::vector<std::int64_t>;

/// Null space of an integer matrix by Gauss-Jordan elimination over the
/// rationals. Each returned vector is primitive (gcd 1) with its first
/// nonzero entry positive. Throws std::overflow_error if an entry does not
/// fit in a double exactly.
std::vector<IntegerRow> exact_integer_nullspace(const std::vector<IntegerRow>& rows, int cols);

/// Orthonormal null-space basis (columns) from an SVD; singular values
/// below rel_threshold * sigma_max count as zero.
Eigen::MatrixXd floating_nullspace(const Eigen::MatrixXd& m, double rel_threshold = 1e-10);

}  // namespace morseflow
