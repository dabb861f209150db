#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "hjprox/core.hpp"

namespace hjprox {

/// A real-valued objective with an optional analytic (sub)gradient. When the
/// gradient is empty, central differences are used.
struct Objective {
  ScalarField value;
  VectorField gradient;

  Point grad(const Point& y) const;
};

struct MinimizeOptions {
  int max_iterations = 500;
  double gradient_tolerance = 1e-9;
  /// Total number of starts, the supplied seed points included.
  int restarts = 1;
  /// Where extra restart points are drawn. Defaults to a cube around the
  /// first seed.
  std::optional<Box> restart_box;
  std::uint64_t seed = 0;
  /// Coordinate-wise Brent sweeps after BFGS; settles iterates onto
  /// separable kinks such as |y_j| = 0.
  bool polish = true;
  /// If set, an iterate leaving this box ends the run with left_bounds set.
  std::optional<Box> bounds;
};

struct MinimizeResult {
  Point argmin;
  double value = 0.0;
  int iterations = 0;
  bool left_bounds = false;
};

/// Damped BFGS with Armijo backtracking from a single start.
MinimizeResult bfgs_minimize(const Objective& f, const Point& x0, const MinimizeOptions& opts);

/// Best local minimum over the given seeds plus (restarts - seeds) random
/// starts. If any run leaves opts.bounds, that run is returned immediately.
MinimizeResult multistart_minimize(const Objective& f, const std::vector<Point>& seeds,
                                   const MinimizeOptions& opts);

/// Minimises y -> |x - y|^2 / (2t) + f(y). The first start is x itself, so
/// the returned value never exceeds the objective at x. Restart points are
/// derived from the bits of (x, t) and are reproducible.
std::pair<Point, double> minimize_quadratic_plus(const Objective& f, const Point& x, TimeParam t,
                                                 int restarts,
                                                 const std::optional<Box>& restart_box = std::nullopt);

/// Hash of the exact bit pattern of a point, for deterministic seeding.
std::uint64_t hash_point(const Point& p, std::uint64_t salt = 0);

}  // namespace hjprox
