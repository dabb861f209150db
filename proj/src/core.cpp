#include "hjprox/core.hpp"

#ifdef __GLIBC__
#include <malloc.h>
#endif

#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <string>
#include <thread>

#include "hjprox/rng.hpp"

namespace hjprox {

TimeParam::TimeParam(double t) : t_(t) {
  if (!(t > 0.0) || !std::isfinite(t)) {
    throw InvalidArgument("time parameter must be finite and > 0, got " + std::to_string(t));
  }
}

Box Box::cube(std::size_t dim, double halfwidth) {
  if (dim == 0) throw InvalidArgument("box dimension must be >= 1");
  if (!(halfwidth > 0.0)) throw InvalidArgument("box halfwidth must be > 0");
  return Box{Point::Constant(static_cast<Eigen::Index>(dim), -halfwidth),
             Point::Constant(static_cast<Eigen::Index>(dim), halfwidth)};
}

double Box::volume() const { return (upper - lower).prod(); }

bool Box::contains(const Point& p, double slack) const {
  return ((p.array() >= lower.array() - slack) && (p.array() <= upper.array() + slack)).all();
}

Point Box::from_unit(const Point& u) const {
  return lower + (upper - lower).cwiseProduct(u);
}

Grid::Grid(std::size_t dim, double lower, double upper, std::size_t points_per_axis)
    : Grid(Box{Point::Constant(static_cast<Eigen::Index>(dim), lower),
               Point::Constant(static_cast<Eigen::Index>(dim), upper)},
           points_per_axis) {}

Grid::Grid(Box box, std::size_t points_per_axis) : box_(std::move(box)), per_axis_(points_per_axis) {
  if (box_.dim() == 0) throw InvalidArgument("grid dimension must be >= 1");
  if (box_.dim() > 3) throw UnsupportedDimension(box_.dim());
  if (per_axis_ < 2) throw InvalidArgument("grid needs at least 2 points per axis");
  if (!((box_.upper.array() > box_.lower.array()).all())) {
    throw InvalidArgument("grid bounds must satisfy lower < upper");
  }
}

std::size_t Grid::size() const {
  std::size_t n = 1;
  for (std::size_t i = 0; i < dim(); ++i) n *= per_axis_;
  return n;
}

double Grid::spacing(std::size_t axis) const {
  const auto a = static_cast<Eigen::Index>(axis);
  return (box_.upper[a] - box_.lower[a]) / static_cast<double>(per_axis_ - 1);
}

Point Grid::node(std::size_t idx) const {
  const std::size_t d = dim();
  Point p(static_cast<Eigen::Index>(d));
  for (std::size_t k = d; k-- > 0;) {
    const std::size_t i = idx % per_axis_;
    idx /= per_axis_;
    const auto a = static_cast<Eigen::Index>(k);
    // last node placed exactly on the upper bound
    p[a] = (i + 1 == per_axis_) ? box_.upper[a]
                                : box_.lower[a] + static_cast<double>(i) * spacing(k);
  }
  return p;
}

bool all_finite(const Point& p) { return p.allFinite(); }

std::vector<double> to_std(const Point& p) { return {p.data(), p.data() + p.size()}; }

Point from_std(const std::vector<double>& v) {
  return Eigen::Map<const Point>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void require_dim(const Point& p, std::size_t dim) {
  if (static_cast<std::size_t>(p.size()) != dim) {
    throw DimensionMismatch(dim, static_cast<std::size_t>(p.size()));
  }
}

double checked(double v, const Point& at, const char* what) {
  if (!std::isfinite(v)) {
    throw NumericFailure(std::string("non-finite value in ") + what, to_std(at));
  }
  return v;
}

std::vector<Point> uniform_box_sample(std::size_t dim, double a, std::size_t count,
                                      std::uint64_t seed) {
  if (dim == 0) throw InvalidArgument("uniform_box_sample: dim must be >= 1");
  if (!(a > 0.0) || !std::isfinite(a)) throw InvalidArgument("uniform_box_sample: a must be > 0");
  if (count == 0) throw InvalidArgument("uniform_box_sample: count must be >= 1");
  const CounterRng rng(seed);
  std::vector<Point> out(count);
  parallel_for(count, [&](std::size_t i) {
    const CounterRng stream = rng.split(i);
    Point p(static_cast<Eigen::Index>(dim));
    for (std::size_t j = 0; j < dim; ++j) p[static_cast<Eigen::Index>(j)] = stream.uniform(j, -a, a);
    out[i] = std::move(p);
  });
  return out;
}

std::pair<Point, double> grid_minimize(const ScalarField& f, const Grid& grid) {
  const std::size_t n = grid.size();
  std::size_t best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const Point p = grid.node(i);
    const double v = checked(f(p), p, "grid_minimize");
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  return {grid.node(best), best_val};
}

Point finite_diff_gradient(const ScalarField& f, const Point& x, double h) {
  if (!(h > 0.0)) throw InvalidArgument("finite_diff_gradient: h must be > 0");
  Point g(x.size());
  Point probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double fp = checked(f(probe), probe, "finite_diff_gradient");
    probe[i] = x[i] - h;
    const double fm = checked(f(probe), probe, "finite_diff_gradient");
    probe[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

void tune_allocator() {
#ifdef __GLIBC__
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  mallopt(M_TOP_PAD, 64 << 20);
#endif
}

std::size_t thread_count() {
  if (const char* env = std::getenv("HJPROX_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) return static_cast<std::size_t>(v);
  }
  return 1;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace hjprox
