#include "morseflow/kernels.hpp"
#include "morseflow/sampling.hpp"
#include "morseflow/spectra.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cstdlib>
#include <stdexcept>
#include <string>

using namespace morseflow;
namespace ts = testing_support;

TEST_SUITE("kernels") {

TEST_CASE("evaluate_batch: serial, OpenMP and direct evaluation agree") {
  const Space s = Space::complex(2);
  const Polynomial p = level_basis(s, 2)->elements[5] + 0.3 * level_basis(s, 1)->elements[2];
  const CompiledPolynomial c(p);
  const Eigen::MatrixXd pts = uniform_sphere(s.ambient_real_dim(), 20000, 31);
  const Eigen::VectorXd a = kernels::serial::evaluate_batch(c, pts), b = kernels::omp::evaluate_batch(c, pts);
  CHECK(a == b);
  for (Eigen::Index i = 0; i < pts.cols(); i += 997) CHECK(a(i) == doctest::Approx(ts::eval(p, pts.col(i))).epsilon(1e-12));
}

TEST_CASE("sup_abs and top_k_abs") {
  std::mt19937_64 rng(32);
  const Eigen::VectorXd v = ts::gaussian(rng, 100001, 1);
  const auto a = kernels::serial::sup_abs(v), b = kernels::omp::sup_abs(v);
  Eigen::Index k;
  const double want = v.cwiseAbs().maxCoeff(&k);
  CHECK(a.value == want);
  CHECK(a.argmax == k);
  CHECK(b.value == want);
  CHECK(b.argmax == k);
  const auto top = kernels::top_k_abs(v, 5);
  REQUIRE(top.size() == 5);
  CHECK(top[0] == k);
  for (std::size_t i = 1; i < top.size(); ++i) CHECK(std::abs(v(top[i])) <= std::abs(v(top[i - 1])));
  Eigen::VectorXd ties = Eigen::VectorXd::Ones(10);
  CHECK(kernels::top_k_abs(ties, 3) == std::vector<Eigen::Index>{0, 1, 2});
}

TEST_CASE("projection moments: serial and OpenMP agree, and match a direct sum") {
  const Space s = Space::real(2);
  std::vector<CompiledPolynomial> basis;
  for (const auto& p : level_basis(s, 1)->elements) basis.emplace_back(p);
  const Eigen::MatrixXd pts = uniform_sphere(3, 30000, 33);
  Eigen::VectorXd vals(pts.cols());
  for (Eigen::Index i = 0; i < pts.cols(); ++i) vals(i) = std::cos(pts(1, i)) + pts(0, i) * pts(2, i);
  const auto a = kernels::serial::projection_moments(basis, pts, vals);
  const auto b = kernels::omp::projection_moments(basis, pts, vals);
  CHECK((a.mean - b.mean).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((a.cov - b.cov).cwiseAbs().maxCoeff() < 1e-14);

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(5);
  const auto& el = level_basis(s, 1)->elements;
  for (Eigen::Index i = 0; i < pts.cols(); ++i)
    for (int k = 0; k < 5; ++k) mean(k) += vals(i) * ts::eval(el[static_cast<std::size_t>(k)], pts.col(i));
  mean /= static_cast<double>(pts.cols());
  CHECK((a.mean - mean).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("parallel reductions do not depend on the thread count") {
  const Space s = Space::complex(1);
  std::vector<CompiledPolynomial> basis;
  for (const auto& p : level_basis(s, 2)->elements) basis.emplace_back(p);
  const Eigen::MatrixXd pts = uniform_sphere(4, 40000, 34);
  const Eigen::VectorXd vals = pts.row(0).transpose();
  const int before = kernels::max_threads();
  const auto a = kernels::omp::projection_moments(basis, pts, vals);
  for (int threads : {1, 3}) {
    setenv("MORSEFLOW_THREADS", std::to_string(threads).c_str(), 1);
    kernels::apply_thread_limit_from_env();
    const auto b = kernels::omp::projection_moments(basis, pts, vals);
    CHECK(a.mean == b.mean);
    CHECK(a.cov == b.cov);
  }
  setenv("MORSEFLOW_THREADS", std::to_string(before).c_str(), 1);
  kernels::apply_thread_limit_from_env();
  unsetenv("MORSEFLOW_THREADS");
}

TEST_CASE("map_indexed keeps index order and rethrows the lowest failure") {
  for (auto exec : {kernels::Exec::Serial, kernels::Exec::Parallel}) {
    const auto v = kernels::map_indexed<int>(100, [](int i) { return i * i; }, exec);
    for (int i = 0; i < 100; ++i) CHECK(v[static_cast<std::size_t>(i)] == i * i);
    try {
      kernels::map_indexed<int>(
          50,
          [](int i) -> int {
            if (i == 7 || i == 30) throw std::runtime_error(std::to_string(i));
            return i;
          },
          exec);
      FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()) == "7");
    }
  }
}

}
