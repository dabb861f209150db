#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "hjprox/errors.hpp"

namespace hjprox {

/// A point of R^n (state variable x or y).
using Point = Eigen::VectorXd;

using ScalarField = std::function<double(const Point&)>;
using VectorField = std::function<Point(const Point&)>;

/// Proximal / Hamilton-Jacobi time scale. Always strictly positive.
class TimeParam {
 public:
  explicit TimeParam(double t);
  double value() const { return t_; }
  operator double() const { return t_; }

 private:
  double t_;
};

/// Axis-aligned box [lower_i, upper_i].
struct Box {
  Point lower;
  Point upper;

  static Box cube(std::size_t dim, double halfwidth);
  std::size_t dim() const { return static_cast<std::size_t>(lower.size()); }
  double volume() const;
  bool contains(const Point& p, double slack = 0.0) const;
  /// Maps u in [0,1)^n to the box.
  Point from_unit(const Point& u) const;
};

/// Tensor-product lattice used by brute-force oracles (dim <= 3 only).
class Grid {
 public:
  Grid(std::size_t dim, double lower, double upper, std::size_t points_per_axis);
  Grid(Box box, std::size_t points_per_axis);

  std::size_t dim() const { return box_.dim(); }
  std::size_t points_per_axis() const { return per_axis_; }
  std::size_t size() const;
  /// Node spacing along axis i.
  double spacing(std::size_t axis) const;
  /// Node with flat index idx; axis 0 varies slowest (lexicographic order).
  Point node(std::size_t idx) const;
  const Box& box() const { return box_; }

 private:
  Box box_;
  std::size_t per_axis_;
};

bool all_finite(const Point& p);
std::vector<double> to_std(const Point& p);
Point from_std(const std::vector<double>& v);
void require_dim(const Point& p, std::size_t dim);

/// Throws NumericFailure if v is not finite.
double checked(double v, const Point& at, const char* what);

/// N points drawn i.i.d. uniformly from [-a, a]^dim. Point i depends only on
/// (seed, i), so any sharding of the index range gives identical output.
std::vector<Point> uniform_box_sample(std::size_t dim, double a, std::size_t count,
                                      std::uint64_t seed);

/// Exhaustive minimum over grid nodes. Ties go to the first node in
/// lexicographic order.
std::pair<Point, double> grid_minimize(const ScalarField& f, const Grid& grid);

/// Central differences, one coordinate at a time.
Point finite_diff_gradient(const ScalarField& f, const Point& x, double h);

/// Keeps large freed blocks on the heap instead of returning them to the OS.
/// Network training allocates many same-sized temporaries per step, and
/// without this each one costs fresh page faults. Call once from main().
void tune_allocator();

/// Worker count from HJPROX_THREADS (default 1).
std::size_t thread_count();

/// Runs body(i) for i in [0, n), sharded over thread_count() workers in
/// contiguous blocks. body must only write to slot i of its outputs.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace hjprox
