#pragma once

#include "morseflow/sphere_function.hpp"

#include <Eigen/Dense>

#include <exception>
#include <span>
#include <vector>

// Data-parallel inner loops. Every kernel has a serial reference in
// kernels::serial and an OpenMP version in kernels::omp; callers pick one
// through Exec. The OpenMP reductions sum fixed-size chunks in a fixed order,
// so their results do not depend on the thread count.
namespace morseflow::kernels {

enum class Exec { Serial, Parallel };

/// Thread cap from MORSEFLOW_THREADS (unset or invalid: OpenMP default).
void apply_thread_limit_from_env();
int max_threads();

struct SupResult {
  double value = 0.0;  // max |f| over the sample set
  Eigen::Index argmax = -1;
};

/// Index and |value| of the largest entries, ties broken by lower index.
std::vector<Eigen::Index> top_k_abs(const Eigen::VectorXd& values, int k);

struct ProjectionMoments {
  Eigen::VectorXd mean;  // mean_i v_i B_k(x_i)
  Eigen::MatrixXd cov;   // sample covariance of the vectors (v_i B_k(x_i))_k
};

namespace serial {
Eigen::VectorXd evaluate_batch(const CompiledPolynomial& p, const Eigen::MatrixXd& points);
SupResult sup_abs(const Eigen::VectorXd& values);
ProjectionMoments projection_moments(std::span<const CompiledPolynomial> basis, const Eigen::MatrixXd& points,
                                     const Eigen::VectorXd& values);
}  // namespace serial

namespace omp {
Eigen::VectorXd evaluate_batch(const CompiledPolynomial& p, const Eigen::MatrixXd& points);
SupResult sup_abs(const Eigen::VectorXd& values);
ProjectionMoments projection_moments(std::span<const CompiledPolynomial> basis, const Eigen::MatrixXd& points,
                                     const Eigen::VectorXd& values);
}  // namespace omp

Eigen::VectorXd evaluate_batch(const CompiledPolynomial& p, const Eigen::MatrixXd& points, Exec exec);
SupResult sup_abs(const Eigen::VectorXd& values, Exec exec);
ProjectionMoments projection_moments(std::span<const CompiledPolynomial> basis, const Eigen::MatrixXd& points,
                                     const Eigen::VectorXd& values, Exec exec);

/// out[i] = f(i) for i in [0, count), evaluated concurrently when exec is
/// Parallel. Result order is the index order either way.
template <typename R, typename F>
std::vector<R> map_indexed(int count, F&& f, Exec exec) {
  std::vector<R> out(static_cast<std::size_t>(count));
  if (exec == Exec::Parallel) {
    // Exceptions must not cross the parallel region; the lowest failing index wins.
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < count; ++i) {
      try {
        out[static_cast<std::size_t>(i)] = f(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  } else {
    for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = f(i);
  }
  return out;
}

}  // namespace morseflow::kernels
