#include "morseflow/heat_flow.hpp"
#include "morseflow/oracle.hpp"
#include "morseflow/sampling.hpp"
#include "morseflow/spectra.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace morseflow;
namespace ts = testing_support;

namespace {

EigenExpansion random_levels(std::mt19937_64& rng, const Space& s, std::vector<int> levels, double scale = 1.0) {
  std::map<int, Eigen::VectorXd> m;
  for (int j : levels) m[j] = scale * ts::gaussian(rng, level_basis(s, j)->size(), 1);
  return {s, m};
}

EigenExpansion unit_level(const Space& s, int j, int k) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(level_basis(s, j)->size());
  c(k) = 1.0;
  return {s, {{j, c}}};
}

EigenExpansion with_level(const EigenExpansion& f, int j, const Eigen::VectorXd& c) {
  auto levels = f.levels();
  levels[j] = c;
  return {f.space(), levels};
}

GridVerdict closed_form_verifier(const Polynomial& p, const Space& s) {
  // Only valid for pure first-level input.
  const auto r = analyze(matrix_from_quadratic(p, s), s);
  GridVerdict g;
  g.is_morse = r.is_morse;
  g.is_minimal = r.is_minimal;
  g.has_distinct_values = r.has_distinct_values;
  g.is_stable = r.is_stable;
  return g;
}

}  // namespace

TEST_SUITE("heat-flow") {

TEST_CASE("evolve scales level j by exp(-lambda_j t)") {
  const Space s = Space::real(2);
  const auto h = unit_level(s, 1, 2);
  const auto e = evolve(h, 1.0);
  CHECK(e.level(1)(2) == doctest::Approx(std::exp(-6.0)).epsilon(1e-15));
  CHECK(e.level(1).norm() == doctest::Approx(std::exp(-6.0)).epsilon(1e-15));
  CHECK_THROWS_AS(evolve(h, -0.1), std::invalid_argument);
}

TEST_CASE("evolve: identity at 0 and semigroup law") {
  std::mt19937_64 rng(1);
  const auto f = random_levels(rng, Space::complex(1), {0, 1, 2, 3});
  const auto f0 = evolve(f, 0.0);
  for (const auto& [j, c] : f.levels()) CHECK(f0.level(j) == c);
  const auto a = evolve(evolve(f, 0.3), 0.7), b = evolve(f, 1.0);
  for (const auto& [j, c] : b.levels())
    CHECK((a.level(j) - c).norm() <= 1e-14 * std::max(c.norm(), 1e-300));
}

TEST_CASE("evolved expansion solves the heat equation pointwise") {
  std::mt19937_64 rng(2);
  for (const Space s : {Space::real(2), Space::complex(1)}) {
    const auto f = random_levels(rng, s, {0, 1, 2, 3, 4}, 0.5);
    const double t = 0.02, dt = 1e-5;
    for (int trial = 0; trial < 5; ++trial) {
      const Eigen::VectorXd x = ts::random_unit(rng, s.ambient_real_dim());
      const double dfdt = (ts::eval(evolve(f, t + dt).polynomial(), x) - ts::eval(evolve(f, t - dt).polynomial(), x)) / (2 * dt);
      const Polynomial ft = evolve(f, t).polynomial();
      const double l1 = ts::fd_sphere_laplacian(ft, x, 2e-3), l2 = ts::fd_sphere_laplacian(ft, x, 1e-3);
      CHECK(dfdt == doctest::Approx((4 * l2 - l1) / 3).epsilon(1e-4).scale(10.0));
    }
  }
}

TEST_CASE("evolved polynomial agrees with per-level evaluation") {
  std::mt19937_64 rng(3);
  const Space s = Space::real(3);
  const auto f = random_levels(rng, s, {0, 1, 2, 3, 4});
  const double t = 0.07;
  const auto ft = evolve(f, t);
  const Eigen::MatrixXd pts = uniform_sphere(s.ambient_real_dim(), 1000, 4);
  for (Eigen::Index i = 0; i < pts.cols(); ++i) {
    double direct = 0.0;
    for (int j = 0; j <= 4; ++j) direct += std::exp(-eigenvalue(s, j) * t) * ts::eval(f.level_polynomial(j), pts.col(i));
    CHECK(ts::eval(ft.polynomial(), pts.col(i)) == doctest::Approx(direct).epsilon(1e-10));
  }
}

TEST_CASE("rescaled deviation") {
  std::mt19937_64 rng(4);
  const Space s = Space::real(2);
  const auto f01 = random_levels(rng, s, {0, 1});
  for (double t : {0.0, 0.5, 3.0}) {
    const auto r = rescaled_deviation(f01, t);
    CHECK_FALSE(r.has_level(0));
    CHECK((r.level(1) - f01.level(1)).norm() < 1e-15);
  }
  const auto f = random_levels(rng, s, {0, 1, 2, 3});
  const auto r0 = rescaled_deviation(f, 0.0);
  CHECK(r0.polynomial() == (f.polynomial() - f.level_polynomial(0)));
}

TEST_CASE("deviation decays with slope lambda_1 - lambda_2") {
  for (const Space s : {Space::real(2), Space::complex(1)}) {
    std::mt19937_64 rng(5);
    auto f = random_levels(rng, s, {1});
    Eigen::VectorXd c2 = ts::gaussian(rng, level_basis(s, 2)->size(), 1);
    // Unit L^2 norm for h_2: c^T G c = 1.
    c2 /= std::sqrt(c2.dot(level_basis(s, 2)->gram * c2));
    f = with_level(f, 2, c2);
    const SupNormEstimator sup(s);
    std::vector<double> t, logd;
    for (int k = 0; k <= 10; ++k) {
      t.push_back(0.1 * k);
      logd.push_back(std::log(deviation_from_h1(f, 0.1 * k, sup)));
    }
    const double target = eigenvalue(s, 1) - eigenvalue(s, 2);
    CHECK(ts::ols_slope(t, logd) == doctest::Approx(target).epsilon(1e-9));
    // deviation(t) = e^{(l1-l2) t} |h_2|.
    CHECK(std::exp(logd[10]) == doctest::Approx(std::exp(target) * std::exp(logd[0])).epsilon(1e-9));
    const auto fit = fit_log_decay(t, [&] {
      std::vector<double> d;
      for (double v : logd) d.push_back(std::exp(v));
      return d;
    }());
    CHECK(fit.slope == doctest::Approx(target).epsilon(1e-9));
    CHECK(fit.r_squared == doctest::Approx(1.0));
  }
}

TEST_CASE("sup norm estimator finds known maxima") {
  const Space s = Space::real(2);
  const auto names = s.variable_names();
  Polynomial xyz(names);
  xyz.add_term({1, 1, 1}, 1.0);
  const SupNormEstimator sup(s);
  CHECK(sup.estimate(xyz).value == doctest::Approx(1.0 / std::sqrt(27.0)).epsilon(1e-12));
  Polynomial q(names);
  q.add_term({2, 0, 0}, -1.0);
  q.add_term({0, 0, 2}, 3.0);
  CHECK(sup.estimate(q).value == doctest::Approx(3.0).epsilon(1e-12));
  // Serial and OpenMP paths agree exactly.
  SupNormOptions o;
  o.exec = kernels::Exec::Serial;
  CHECK(SupNormEstimator(s, o).estimate(xyz).value == sup.estimate(xyz).value);
}

TEST_CASE("tail bound against direct summation") {
  const Space s = Space::real(2);
  auto direct = [&](double t, int N) {
    long double sum = 0.0L;
    const long double l1 = 6.0L, l2 = 20.0L;
    for (int j = 2; j <= 10000; ++j) {
      const long double lj = 2.0L * j * (2.0L * j + 1.0L);
      sum += (1.0L + std::pow(static_cast<long double>(j), N)) * std::exp((l2 - lj) * t);
    }
    return static_cast<double>(std::exp((l1 - l2) * t) * sum);
  };
  for (int N : {0, 2}) {
    for (int J : {2, 5, 12}) {
      TailBoundParams p{1.0, N, J};
      for (double t : {0.01, 0.1, 0.5, 1.0, 2.0}) {
        CAPTURE(N);
        CAPTURE(J);
        CAPTURE(t);
        const double b = tail_bound(p, s, t), d = direct(t, N);
        CHECK(b >= d * (1 - 1e-12));
        if (t >= 0.5) CHECK(b <= d * (1 + 1e-6));
      }
    }
  }
  const TailBoundParams p{1.0, 0, 8};
  // Only j = 2 matters at large t.
  CHECK(tail_bound(p, s, 3.0) == doctest::Approx(2.0 * std::exp(-14.0 * 3.0)).epsilon(1e-12));
  CHECK(tail_bound(p, s, 1.0) >= tail_bound(p, s, 2.0));
  CHECK(tail_bound(p, s, 2.0) >= tail_bound(p, s, 4.0));
  CHECK(tail_bound(p, s, 10.0) < 1e-60);
  CHECK_THROWS_AS(tail_bound(p, s, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(tail_bound(p, s, -1.0), std::invalid_argument);
}

TEST_CASE("tail bound dominates the measured deviation") {
  std::mt19937_64 rng(6);
  for (const Space s : {Space::real(2), Space::complex(1)}) {
    const auto f = random_levels(rng, s, {0, 1, 2, 3, 4}, 0.7);
    const SupNormEstimator sup(s);
    const auto params = instantiate_tail_params(f, sup, 0);
    CHECK(params.C > 0.0);
    for (double t : geometric_grid(1e-3, 10.0, 64)) CHECK(deviation_from_h1(f, t, sup) <= tail_bound(params, s, t));
  }
}

TEST_CASE("project_level recovers coefficients within 3 standard errors") {
  const Space s = Space::real(2);
  const Eigen::MatrixXd pts = uniform_sphere(3, 100000, 9);
  SUBCASE("constant function has no level-1 component") {
    const Eigen::VectorXd vals = Eigen::VectorXd::Ones(pts.cols());
    const auto est = project_level(pts, vals, s, 1);
    for (Eigen::Index k = 0; k < est.coefficients.size(); ++k)
      CHECK(std::abs(est.coefficients(k)) <= 3.0 * est.standard_errors(k));
  }
  SUBCASE("a level-1 basis element") {
    const Polynomial p = level_basis(s, 1)->elements[3];
    Eigen::VectorXd vals(pts.cols());
    for (Eigen::Index i = 0; i < pts.cols(); ++i) vals(i) = ts::eval(p, pts.col(i));
    const auto est = project_level(pts, vals, s, 1);
    for (Eigen::Index k = 0; k < est.coefficients.size(); ++k) {
      CAPTURE(k);
      CHECK(std::abs(est.coefficients(k) - (k == 3 ? 1.0 : 0.0)) <= 3.0 * est.standard_errors(k));
    }
  }
  SUBCASE("a level-2 function projected on level 1") {
    const Polynomial p = level_basis(s, 2)->elements[0] + level_basis(s, 2)->elements[4];
    Eigen::VectorXd vals(pts.cols());
    for (Eigen::Index i = 0; i < pts.cols(); ++i) vals(i) = ts::eval(p, pts.col(i));
    const auto est = project_level(pts, vals, s, 1);
    for (Eigen::Index k = 0; k < est.coefficients.size(); ++k)
      CHECK(std::abs(est.coefficients(k)) <= 3.0 * est.standard_errors(k));
  }
  SUBCASE("too few samples") {
    const Eigen::MatrixXd few = uniform_sphere(3, 50, 1);
    CHECK_THROWS_AS(project_level(few, Eigen::VectorXd::Ones(50), s, 1), std::invalid_argument);
  }
}

TEST_CASE("project_level: serial and OpenMP agree") {
  const Space s = Space::complex(1);
  const Eigen::MatrixXd pts = uniform_sphere(4, 5000, 10);
  Eigen::VectorXd vals(pts.cols());
  for (Eigen::Index i = 0; i < pts.cols(); ++i) vals(i) = std::sin(pts(0, i)) + pts(2, i) * pts(2, i);
  const auto a = project_level(pts, vals, s, 1, kernels::Exec::Serial);
  const auto b = project_level(pts, vals, s, 1, kernels::Exec::Parallel);
  CHECK((a.coefficients - b.coefficients).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("stabilization: pure first level is stable from the first grid point") {
  Eigen::VectorXd c(5);
  c << 0.0, 0.0, 0.0, -1.0, 0.3;  // diag(-1, 0.3, 0.7)
  const Space s = Space::real(2);
  const EigenExpansion f(s, {{0, Eigen::VectorXd::Constant(1, 2.0)}, {1, c}});
  const auto grid = geometric_grid(1e-3, 10.0, 16);
  const auto scan = stabilization_time(f, grid, closed_form_verifier);
  REQUIRE(scan.reached());
  CHECK(*scan.T() == grid.front());
  for (double d : scan.deviations) CHECK(d == 0.0);
}

TEST_CASE("stabilization: h1 = 0 is refused") {
  std::mt19937_64 rng(7);
  auto f = random_levels(rng, Space::real(2), {0, 2, 3});
  const auto grid = geometric_grid(1e-3, 10.0, 8);
  const auto scan = stabilization_time(f, grid, closed_form_verifier);
  CHECK_FALSE(scan.reached());
  CHECK(scan.diagnostic == "projection onto first eigenspace is degenerate");
  CHECK_THROWS_AS(stabilization_time(f, std::vector<double>{}, closed_form_verifier), std::invalid_argument);
  CHECK_THROWS_AS(stabilization_time(f, std::vector<double>{1.0, 0.5}, closed_form_verifier), std::invalid_argument);
}

TEST_CASE("stabilization: large level-2 content delays T; halving it does not") {
  const Space s = Space::real(2);
  std::mt19937_64 rng(8);
  const auto a = ts::random_stable(rng, s, 0.3);
  EigenExpansion f = with_first_level_matrix(EigenExpansion(s, {}), a);
  const Eigen::VectorXd c2 = 30.0 * ts::gaussian(rng, level_basis(s, 2)->size(), 1);
  const auto grid = geometric_grid(1e-3, 10.0, 64);
  OracleConfig cfg;
  const auto big = stabilization_time(with_level(f, 2, c2), grid, numeric_verifier(cfg));
  const auto half = stabilization_time(with_level(f, 2, 0.5 * c2), grid, numeric_verifier(cfg));
  REQUIRE(big.reached());
  REQUIRE(half.reached());
  CHECK(*big.first_stable_index > 0);
  CHECK_FALSE(big.verdicts.front().accepted());
  CHECK(*half.T() < *big.T());
  for (std::size_t i = *big.first_stable_index; i < grid.size(); ++i) CHECK(big.verdicts[i].accepted());
}

TEST_CASE("stabilization: grid refinement and thread independence") {
  const Space s = Space::complex(1);
  std::mt19937_64 rng(9);
  auto f = random_levels(rng, s, {0, 1, 2, 3}, 1.0);
  f = with_first_level_matrix(f, ts::random_stable(rng, s, 0.3));
  const auto coarse = geometric_grid(1e-3, 10.0, 17);
  const auto fine = geometric_grid(1e-3, 10.0, 65);
  const auto a = stabilization_time(f, coarse, numeric_verifier());
  const auto b = stabilization_time(f, fine, numeric_verifier());
  REQUIRE(a.reached());
  REQUIRE(b.reached());
  // The fine grid contains the coarse one.
  CHECK(*b.T() <= *a.T() * (1 + 1e-12));
  const double ratio = coarse[1] / coarse[0];
  CHECK(*b.T() > *a.T() / ratio * (1 - 1e-12));

  StabilizationOptions serial;
  serial.exec = kernels::Exec::Serial;
  OracleConfig scfg;
  scfg.exec = kernels::Exec::Serial;
  const auto c = stabilization_time(f, coarse, numeric_verifier(scfg), serial);
  CHECK(c.T() == a.T());
  CHECK(c.deviations == a.deviations);
}

TEST_CASE("grids and fits") {
  const auto g = geometric_grid(1e-3, 10.0, 64);
  CHECK(g.size() == 64);
  CHECK(g.front() == 1e-3);
  CHECK(g.back() == 10.0);
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);
  CHECK_THROWS_AS(geometric_grid(0.0, 1.0, 4), std::invalid_argument);
  CHECK(asymptotic_window_start(Space::real(2)) == doctest::Approx(std::log(1e8) / 22.0));
}

TEST_CASE("first-level matrix round trip") {
  std::mt19937_64 rng(10);
  for (const Space s : {Space::real(3), Space::complex(2)}) {
    const auto a = ts::random_traceless(rng, s);
    const auto f = with_first_level_matrix(random_levels(rng, s, {0, 1, 2}), a);
    CHECK((first_level_matrix(f).entries() - a.entries()).cwiseAbs().maxCoeff() < 1e-13);
    // h_1 as a polynomial is the quadratic form of A.
    const Polynomial diff = f.level_polynomial(1) - quadratic_form_polynomial(a, s);
    CHECK(coefficient_l1_norm(diff) < 1e-12);
  }
}

TEST_CASE("expansion validation") {
  CHECK_THROWS_AS(EigenExpansion(Space::real(2), {{1, Eigen::VectorXd::Zero(4)}}), std::invalid_argument);
  CHECK_THROWS_AS(EigenExpansion(Space::real(2), {{-1, Eigen::VectorXd::Zero(1)}}), std::invalid_argument);
}

}
