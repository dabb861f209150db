#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "hjprox/core.hpp"
#include "hjprox/minorants.hpp"
#include "hjprox/priors.hpp"

namespace hjprox {

/// Additive recurrence (Kronecker) points in [0,1)^dim with the generalised
/// golden-ratio increments, shifted by a random offset drawn from seed.
std::vector<Point> kronecker_points(std::size_t dim, std::size_t count, std::uint64_t seed);

/// Psi of a minorant: t J_PQM(y) + |y|^2 / 2.
double minorant_psi(const MinorantModel& m, const Point& y);

/// Largest |target - approx| over n_samples shifted Kronecker points of the
/// box, its corners and the extra points. A lower estimate of the true sup.
double eps_inf(const ScalarField& target, const ScalarField& approx, const Box& box, std::size_t n_samples,
               std::uint64_t seed, const std::vector<Point>& extra = {});
/// Same, comparing target against minorant_psi(m, .) and adding the anchors
/// that lie in the box.
double eps_inf(const ScalarField& target, const MinorantModel& m, const Box& box, std::size_t n_samples,
               std::uint64_t seed);

/// Monte Carlo estimate of the integral over the box of det(hess Psi + I)^(1/2)
/// with central-difference Hessians. h <= 0 selects 1e-4 (1 + |y|).
double hessian_integral(const ScalarField& psi, const Box& box, std::size_t n_mc, double h, std::uint64_t seed);

struct ErrorReport {
  std::size_t dim = 0;
  std::size_t K = 0;
  /// Median over trials.
  double eps_inf = 0.0;
  Box box;
  double integrand_estimate = 0.0;
  /// Slope of log eps_inf against log K over every K of this dimension.
  double scaling_exponent = 0.0;
  /// Same slope using only the K values up to this one (nan for the first).
  double slope_running = 0.0;
};

struct ScalingOptions {
  /// PQM margin; must not exceed the semiconvexity margin of the prior.
  double alpha = 0.25;
  /// Samples are drawn from [-a, a]^n; the error is measured on the same box
  /// in y.
  double a = 1.0;
  /// Points used for each sup estimate.
  std::size_t eval_points = 8192;
  std::size_t hessian_samples = 1000;
};

/// For each dim and K: K anchors from a shifted Kronecker set, a PQM of
/// t J_BVS, and eps_inf on the box, as the median over trials.
std::vector<ErrorReport> scaling_experiment(const PriorSpec& p, TimeParam t, const std::vector<std::size_t>& dims,
                                            const std::vector<std::size_t>& K_list, std::size_t trials,
                                            std::uint64_t seed, const ScalingOptions& opts = {});

/// Rows `dim,K,eps_inf,slope_running` with a header line.
void write_scaling_report(std::ostream& os, const std::vector<ErrorReport>& reports);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// (t sup|J_BVS - J_PQM|, t sup|jtilde - J_PQM|) over sampled box points. When
/// jtilde is a reachable prior and the PQM is a minorant, lhs <= rhs.
std::pair<double, double> upper_bound_check(const ScalarField& jtilde, const ScalarField& jbvs,
                                            const MinorantModel& pqm, const Box& box, std::size_t n_samples,
                                            std::uint64_t seed);

}  // namespace hjprox
