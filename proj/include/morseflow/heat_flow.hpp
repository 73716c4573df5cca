#pragma once

#include "morseflow/kernels.hpp"
#include "morseflow/morse.hpp"
#include "morseflow/polynomial.hpp"
#include "morseflow/space.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace morseflow {

/// Finite spectral data: level j -> coefficients over level_basis(space, j).
/// Immutable; the polynomial form is built once at construction.
class EigenExpansion {
 public:
  EigenExpansion(Space space, std::map<int, Eigen::VectorXd> levels);

  const Space& space() const { return space_; }
  const std::map<int, Eigen::VectorXd>& levels() const { return levels_; }
  bool has_level(int j) const { return levels_.count(j) > 0; }
  /// Coefficients of level j; zeros when the level is absent.
  Eigen::VectorXd level(int j) const;
  int max_level() const { return levels_.empty() ? -1 : levels_.rbegin()->first; }

  const Polynomial& polynomial() const { return *poly_; }
  /// h_j as an ambient polynomial.
  Polynomial level_polynomial(int j) const;

 private:
  Space space_;
  std::map<int, Eigen::VectorXd> levels_;
  std::shared_ptr<const Polynomial> poly_;
};

/// Heat semigroup: level j scaled by exp(-lambda_j t). Throws for t < 0.
EigenExpansion evolve(const EigenExpansion& f, double t);

/// (f_t - h_0) exp(lambda_1 t): level 0 dropped, level j scaled by exp((lambda_1 - lambda_j) t).
EigenExpansion rescaled_deviation(const EigenExpansion& f, double t);

/// Levels >= 2 only: rescaled_deviation(f, t) - h_1 is tail_levels(rescaled_deviation(f, t)).
EigenExpansion tail_levels(const EigenExpansion& f);

/// The traceless matrix of h_1 (zero matrix when level 1 is absent).
CoefficientMatrix first_level_matrix(const EigenExpansion& f);
/// f with its level-1 coefficients replaced by those of the traceless matrix a.
EigenExpansion with_first_level_matrix(const EigenExpansion& f, const CoefficientMatrix& a);

struct SupNormOptions {
  int points_per_dim = 4096;  // sample count = points_per_dim * ambient_real_dim
  int refine_top = 16;
  int ascent_iterations = 200;
  std::uint64_t seed = 0x5eedULL;
  kernels::Exec exec = kernels::Exec::Parallel;
};

/// C^0 norm on the sphere: max over a seeded quasi-uniform point set, then
/// projected gradient ascent of |p| from the best samples.
class SupNormEstimator {
 public:
  explicit SupNormEstimator(const Space& space, SupNormOptions options = {});

  struct Estimate {
    double value = 0.0;
    double sample_max = 0.0;
    Eigen::VectorXd argmax;
    int samples = 0;
  };

  Estimate estimate(const Polynomial& p) const;
  /// As estimate(), reusing values of p already computed at points().
  Estimate estimate_with_values(const Polynomial& p, const Eigen::VectorXd& values) const;

  const Eigen::MatrixXd& points() const { return points_; }
  const Space& space() const { return space_; }
  const SupNormOptions& options() const { return options_; }

 private:
  Space space_;
  SupNormOptions options_;
  Eigen::MatrixXd points_;
};

/// sup-norm of rescaled_deviation(f, t) - h_1.
double deviation_from_h1(const EigenExpansion& f, double t, const SupNormEstimator& sup);

/// Shape of the growth condition |h_j| <= C (1 + j^N), with the series kept up
/// to truncation_level and the remainder majorized geometrically.
struct TailBoundParams {
  double C = 1.0;
  int N = 0;
  int truncation_level = 0;
};

/// Upper bound for C e^{(l1-l2)t} sum_{j > max(truncation_level, from_level-1)} (1+j^N) e^{(l2-lj)t};
/// +infinity when the geometric majorant does not converge at this t.
double truncation_error_bound(const TailBoundParams& params, const Space& space, double t, int from_level = 2);

/// C e^{(l1-l2)t} sum_{j=from_level}^{J} (1+j^N) e^{(l2-lj)t} + truncation_error_bound. Requires t > 0.
double tail_bound(const TailBoundParams& params, const Space& space, double t, int from_level = 2);

/// C = max over populated levels j >= 2 of |h_j|_sup / (1 + j^N); truncation at the top level.
TailBoundParams instantiate_tail_params(const EigenExpansion& f, const SupNormEstimator& sup, int N = 0);

struct ProjectionEstimate {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd standard_errors;
  int samples = 0;
};

int min_projection_samples(const Space& space, int j);

/// Monte Carlo estimate of the level-j coefficients of sampled data.
/// points: uniform samples on the ambient unit sphere (columns).
ProjectionEstimate project_level(const Eigen::MatrixXd& points, const Eigen::VectorXd& values, const Space& space, int j,
                                 kernels::Exec exec = kernels::Exec::Parallel);

/// Expansion with levels 0..max_level projected from samples.
EigenExpansion expansion_from_samples(const Eigen::MatrixXd& points, const Eigen::VectorXd& values, const Space& space,
                                      int max_level, kernels::Exec exec = kernels::Exec::Parallel);

struct GridVerdict {
  bool is_morse = false;
  bool is_minimal = false;
  bool has_distinct_values = false;
  bool is_stable = false;
  double margin = 0.0;  // smallest gap between critical values found
  int critical_points = 0;
  std::string diagnostic;

  /// Stable minimal Morse function.
  bool accepted() const { return is_minimal && is_stable; }
};

using MorseVerifier = std::function<GridVerdict(const Polynomial&, const Space&)>;

struct StabilizationScan {
  std::vector<double> grid;
  std::vector<GridVerdict> verdicts;
  std::vector<double> deviations;
  std::optional<std::size_t> first_stable_index;
  std::optional<MorseReport> h1_report;
  std::string diagnostic;

  bool reached() const { return first_stable_index.has_value(); }
  std::optional<double> T() const {
    return first_stable_index ? std::optional<double>(grid[*first_stable_index]) : std::nullopt;
  }
};

struct StabilizationOptions {
  SupNormOptions sup_norm;
  kernels::Exec exec = kernels::Exec::Parallel;
};

/// Smallest grid point T with verdict true at every grid point >= T. The
/// verifier sees the rescaled function (f_t - h_0) e^{lambda_1 t}, which has
/// the critical points, Hessian signs and value order of f_t. Persistence is
/// certified on the grid only.
StabilizationScan stabilization_time(const EigenExpansion& f, std::span<const double> grid, const MorseVerifier& verifier,
                                     const StabilizationOptions& options = {});

std::vector<double> geometric_grid(double start, double stop, int count);
std::vector<double> linear_grid(double start, double stop, int count);

struct DecayFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double rms_residual = 0.0;
  double max_abs_residual = 0.0;
  int points = 0;
  double t_min = 0.0;
};

/// Least squares fit of log(deviation) against t over grid points t >= t_min
/// with positive finite deviation.
DecayFit fit_log_decay(std::span<const double> t, std::span<const double> deviation, double t_min = 0.0);

/// Time after which level 3 is suppressed relative to level 2 by `ratio`:
/// ln(1/ratio) / (lambda_3 - lambda_2).
double asymptotic_window_start(const Space& space, double ratio = 1e-8);

}  // namespace morseflow
