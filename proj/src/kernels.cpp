#include "morseflow/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <string>

namespace morseflow::kernels {

namespace {

constexpr Eigen::Index kChunk = 1024;

Eigen::Index num_chunks(Eigen::Index n) { return (n + kChunk - 1) / kChunk; }

Eigen::MatrixXd products(std::span<const CompiledPolynomial> basis, const Eigen::MatrixXd& points,
                         const Eigen::VectorXd& values, bool parallel) {
  const auto d = static_cast<Eigen::Index>(basis.size());
  const Eigen::Index n = points.cols();
  Eigen::MatrixXd y(d, n);
#pragma omp parallel for schedule(static) if (parallel)
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < d; ++k) y(k, i) = values(i) * basis[static_cast<std::size_t>(k)](points.col(i).data());
  return y;
}

}  // namespace

void apply_thread_limit_from_env() {
  if (const char* env = std::getenv("MORSEFLOW_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) omp_set_num_threads(n);
    } catch (const std::exception&) {
    }
  }
}

int max_threads() { return omp_get_max_threads(); }

std::vector<Eigen::Index> top_k_abs(const Eigen::VectorXd& values, int k) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(values.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  const auto kk = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 0)), idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(kk), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    const double va = std::abs(values(a)), vb = std::abs(values(b));
    return va > vb || (va == vb && a < b);
  });
  idx.resize(kk);
  return idx;
}

namespace serial {

Eigen::VectorXd evaluate_batch(const CompiledPolynomial& p, const Eigen::MatrixXd& points) {
  Eigen::VectorXd out(points.cols());
  for (Eigen::Index i = 0; i < points.cols(); ++i) out(i) = p(points.col(i).data());
  return out;
}

SupResult sup_abs(const Eigen::VectorXd& values) {
  SupResult r;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double a = std::abs(values(i));
    if (r.argmax < 0 || a > r.value) {
      r.value = a;
      r.argmax = i;
    }
  }
  return r;
}

ProjectionMoments projection_moments(std::span<const CompiledPolynomial> basis, const Eigen::MatrixXd& points,
                                     const Eigen::VectorXd& values) {
  const Eigen::MatrixXd y = products(basis, points, values, false);
  const auto n = static_cast<double>(y.cols());
  ProjectionMoments out;
  out.mean = y.rowwise().sum() / n;
  const Eigen::MatrixXd c = y.colwise() - out.mean;
  out.cov = (c * c.transpose()) / std::max(1.0, n - 1.0);
  return out;
}

}  // namespace serial

namespace omp {

Eigen::VectorXd evaluate_batch(const CompiledPolynomial& p, const Eigen::MatrixXd& points) {
  Eigen::VectorXd out(points.cols());
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < points.cols(); ++i) out(i) = p(points.col(i).data());
  return out;
}

SupResult sup_abs(const Eigen::VectorXd& values) {
  const Eigen::Index chunks = num_chunks(values.size());
  std::vector<SupResult> partial(static_cast<std::size_t>(chunks));
#pragma omp parallel for schedule(static)
  for (Eigen::Index c = 0; c < chunks; ++c) {
    const Eigen::Index lo = c * kChunk, hi = std::min(values.size(), lo + kChunk);
    partial[static_cast<std::size_t>(c)] = serial::sup_abs(values.segment(lo, hi - lo));
    partial[static_cast<std::size_t>(c)].argmax += lo;
  }
  SupResult r;
  for (const auto& p : partial)
    if (r.argmax < 0 || p.value > r.value) r = p;
  return r;
}

ProjectionMoments projection_moments(std::span<const CompiledPolynomial> basis, const Eigen::MatrixXd& points,
                                     const Eigen::VectorXd& values) {
  const Eigen::MatrixXd y = products(basis, points, values, true);
  const Eigen::Index d = y.rows(), n = y.cols();
  const Eigen::Index chunks = num_chunks(n);

  std::vector<Eigen::VectorXd> sums(static_cast<std::size_t>(chunks));
#pragma omp parallel for schedule(static)
  for (Eigen::Index c = 0; c < chunks; ++c) {
    const Eigen::Index lo = c * kChunk, hi = std::min(n, lo + kChunk);
    sums[static_cast<std::size_t>(c)] = y.middleCols(lo, hi - lo).rowwise().sum();
  }
  ProjectionMoments out;
  out.mean = Eigen::VectorXd::Zero(d);
  for (const auto& s : sums) out.mean += s;
  out.mean /= static_cast<double>(n);

  std::vector<Eigen::MatrixXd> outer(static_cast<std::size_t>(chunks));
#pragma omp parallel for schedule(static)
  for (Eigen::Index c = 0; c < chunks; ++c) {
    const Eigen::Index lo = c * kChunk, hi = std::min(n, lo + kChunk);
    const Eigen::MatrixXd cc = y.middleCols(lo, hi - lo).colwise() - out.mean;
    outer[static_cast<std::size_t>(c)] = cc * cc.transpose();
  }
  out.cov = Eigen::MatrixXd::Zero(d, d);
  for (const auto& o : outer) out.cov += o;
  out.cov /= std::max(1.0, static_cast<double>(n) - 1.0);
  return out;
}

}  // namespace omp

Eigen::VectorXd evaluate_batch(const CompiledPolynomial& p, const Eigen::MatrixXd& points, Exec exec) {
  return exec == Exec::Parallel ? omp::evaluate_batch(p, points) : serial::evaluate_batch(p, points);
}

SupResult sup_abs(const Eigen::VectorXd& values, Exec exec) {
  return exec == Exec::Parallel ? omp::sup_abs(values) : serial::sup_abs(values);
}

ProjectionMoments projection_moments(std::span<const CompiledPolynomial> basis, const Eigen::MatrixXd& points,
                                     const Eigen::VectorXd& values, Exec exec) {
  return exec == Exec::Parallel ? omp::projection_moments(basis, points, values)
                                : serial::projection_moments(basis, points, values);
}

}  // namespace morseflow::kernels
