#include "hjprox/optimize.hpp"

#include <boost/math/tools/minima.hpp>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "hjprox/rng.hpp"

namespace hjprox {
namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxLineSearch = 60;

bool outside(const MinimizeOptions& opts, const Point& p) {
  return opts.bounds && !opts.bounds->contains(p);
}

// One sweep of derivative-free 1-D minimisation per coordinate. Returns true
// if the value improved.
bool polish_sweep(const Objective& f, Point& y, double& fy) {
  bool improved = false;
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    const double r = 1e-2 * (1.0 + std::abs(y[j]));
    Point probe = y;
    auto line = [&](double v) {
      probe[j] = v;
      const double val = f.value(probe);
      return std::isfinite(val) ? val : std::numeric_limits<double>::max();
    };
    const auto [vj, fv] = boost::math::tools::brent_find_minima(line, y[j] - r, y[j] + r,
                                                                 std::numeric_limits<double>::digits);
    if (fv < fy) {
      y[j] = vj;
      fy = fv;
      improved = true;
    }
  }
  return improved;
}

struct SimplexContext {
  const Objective* f;
  Point origin;
  Eigen::MatrixXd frame;
  Point z;
  Point scratch;
};

double simplex_value(const gsl_vector* v, void* params) {
  auto* ctx = static_cast<SimplexContext*>(params);
  for (Eigen::Index i = 0; i < ctx->z.size(); ++i) ctx->z[i] = gsl_vector_get(v, static_cast<std::size_t>(i));
  ctx->scratch.noalias() = ctx->origin + ctx->frame * ctx->z;
  const double val = ctx->f->value(ctx->scratch);
  return std::isfinite(val) ? val : GSL_POSINF;
}

// Orthonormal frame for round k: the identity first, then random rotations.
Eigen::MatrixXd simplex_frame(Eigen::Index n, int round) {
  if (round == 0) return Eigen::MatrixXd::Identity(n, n);
  const CounterRng rng(0x51e7u + static_cast<std::uint64_t>(round));
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.uniform(static_cast<std::uint64_t>(i), -1.0, 1.0);
  return Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ();
}

// Nelder-Mead from a small simplex around x. Used where BFGS stalls on a
// kink, which coordinate searches cannot follow unless it is axis aligned.
// An axis-aligned simplex collapses onto a ridge point for the same reason,
// so each round uses a differently rotated one.
bool simplex_polish(const Objective& f, Point& x, double& fx) {
  const auto n = static_cast<std::size_t>(x.size());
  SimplexContext ctx{&f, x, {}, Point(x.size()), Point(x.size())};
  gsl_multimin_function fn{&simplex_value, n, &ctx};
  gsl_vector* start = gsl_vector_alloc(n);
  gsl_vector* steps = gsl_vector_alloc(n);
  gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);
  bool improved = false;
  int misses = 0;
  for (int round = 0; round < 16 && misses < 4; ++round) {
    ctx.origin = x;
    ctx.frame = simplex_frame(x.size(), round);
    gsl_vector_set_zero(start);
    gsl_vector_set_all(steps, 1e-2 * (1.0 + x.lpNorm<Eigen::Infinity>()));
    gsl_multimin_fminimizer_set(s, &fn, start, steps);
    for (int it = 0; it < 4000; ++it) {
      if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
      if (gsl_multimin_fminimizer_size(s) < 1e-13 * (1.0 + x.norm())) break;
    }
    const double val = gsl_multimin_fminimizer_minimum(s);
    if (!(val < fx)) {
      ++misses;
      continue;
    }
    misses = 0;
    for (std::size_t i = 0; i < n; ++i) ctx.z[static_cast<Eigen::Index>(i)] = gsl_vector_get(s->x, i);
    x = ctx.origin + ctx.frame * ctx.z;
    fx = val;
    improved = true;
  }
  gsl_multimin_fminimizer_free(s);
  gsl_vector_free(steps);
  gsl_vector_free(start);
  return improved;
}

}  // namespace

Point Objective::grad(const Point& y) const {
  if (gradient) return gradient(y);
  Point g(y.size());
  Point probe = y;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double h = 1e-6 * (1.0 + std::abs(y[i]));
    probe[i] = y[i] + h;
    const double fp = value(probe);
    probe[i] = y[i] - h;
    const double fm = value(probe);
    probe[i] = y[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

MinimizeResult bfgs_minimize(const Objective& f, const Point& x0, const MinimizeOptions& opts) {
  const Eigen::Index n = x0.size();
  MinimizeResult res;
  Point x = x0;
  double fx = checked(f.value(x), x, "objective");
  Point g = f.grad(x);
  if (!g.allFinite()) throw NumericFailure("non-finite gradient", to_std(x));
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  bool fresh = true;

  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    if (g.norm() <= opts.gradient_tolerance) break;
    Point p = -H * g;
    double slope = g.dot(p);
    if (!(slope < 0.0)) {
      H.setIdentity();
      p = -g;
      slope = g.dot(p);
      fresh = true;
    }
    double step = 1.0;
    Point xn;
    double fn = fx;
    bool accepted = false;
    for (int ls = 0; ls < kMaxLineSearch; ++ls) {
      xn = x + step * p;
      fn = f.value(xn);
      if (std::isfinite(fn) && fn <= fx + kArmijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (fresh) break;
      // stale curvature model; retry once with steepest descent
      H.setIdentity();
      fresh = true;
      continue;
    }
    // on flat stretches the full step is tiny and no curvature is learned;
    // keep doubling while it pays
    if (step == 1.0 && !outside(opts, xn)) {
      for (int ex = 0; ex < kMaxLineSearch; ++ex) {
        const Point xe = x + 2.0 * step * p;
        if (outside(opts, xe)) break;
        const double fe = f.value(xe);
        if (!(std::isfinite(fe) && fe < fn && fe <= fx + kArmijo * 2.0 * step * slope)) break;
        step *= 2.0;
        xn = xe;
        fn = fe;
      }
    }
    if (outside(opts, xn)) {
      res.argmin = xn;
      res.value = fn;
      res.iterations = it + 1;
      res.left_bounds = true;
      return res;
    }
    const Point gn = f.grad(xn);
    if (!gn.allFinite()) throw NumericFailure("non-finite gradient", to_std(xn));
    const Point s = xn - x;
    const Point yv = gn - g;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      if (fresh) {
        H *= sy / yv.squaredNorm();
        fresh = false;
      }
      const double rho = 1.0 / sy;
      const Point Hy = H * yv;
      H += ((sy + yv.dot(Hy)) * rho * rho) * (s * s.transpose()) -
           rho * (Hy * s.transpose() + s * Hy.transpose());
    }
    const double decrease = fx - fn;
    x = xn;
    fx = fn;
    g = gn;
    if (decrease <= 1e-16 * (1.0 + std::abs(fx)) && s.norm() <= 1e-15 * (1.0 + x.norm())) break;
  }

  if (opts.polish) {
    for (int sweep = 0; sweep < 8; ++sweep) {
      if (!polish_sweep(f, x, fx)) break;
    }
    if (x.size() >= 2 && f.grad(x).norm() > 1e-6 && simplex_polish(f, x, fx)) {
      for (int sweep = 0; sweep < 4; ++sweep) {
        if (!polish_sweep(f, x, fx)) break;
      }
    }
    if (outside(opts, x)) res.left_bounds = true;
  }
  res.argmin = x;
  res.value = checked(f.value(x), x, "objective");
  res.iterations = it;
  return res;
}

MinimizeResult multistart_minimize(const Objective& f, const std::vector<Point>& seeds,
                                   const MinimizeOptions& opts) {
  if (seeds.empty()) throw InvalidArgument("multistart_minimize: need at least one seed");
  if (opts.restarts < 1) throw InvalidArgument("multistart_minimize: restarts must be >= 1");
  const Point& first = seeds.front();
  Box box = opts.restart_box
                ? *opts.restart_box
                : Box::cube(static_cast<std::size_t>(first.size()),
                            std::max(4.0, 1.5 * first.lpNorm<Eigen::Infinity>()));
  std::vector<Point> starts = seeds;
  const CounterRng rng(opts.seed);
  for (int k = static_cast<int>(seeds.size()); k < opts.restarts; ++k) {
    const CounterRng stream = rng.split(static_cast<std::uint64_t>(k));
    Point u(first.size());
    for (Eigen::Index j = 0; j < u.size(); ++j) u[j] = stream.uniform(static_cast<std::uint64_t>(j));
    starts.push_back(box.from_unit(u));
  }
  MinimizeResult best;
  best.value = std::numeric_limits<double>::infinity();
  for (const Point& s : starts) {
    MinimizeResult r = bfgs_minimize(f, s, opts);
    if (r.left_bounds) return r;
    if (r.value < best.value) best = std::move(r);
  }
  return best;
}

std::uint64_t hash_point(const Point& p, std::uint64_t salt) {
  std::uint64_t h = mix64(salt ^ static_cast<std::uint64_t>(p.size()));
  for (Eigen::Index i = 0; i < p.size(); ++i) h = mix64(h ^ std::bit_cast<std::uint64_t>(p[i]));
  return h;
}

std::pair<Point, double> minimize_quadratic_plus(const Objective& f, const Point& x, TimeParam t,
                                                 int restarts, const std::optional<Box>& restart_box) {
  if (restarts < 1) throw InvalidArgument("minimize_quadratic_plus: restarts must be >= 1");
  const double tv = t.value();
  Objective q;
  q.value = [&](const Point& y) { return (x - y).squaredNorm() / (2.0 * tv) + f.value(y); };
  if (f.gradient) {
    q.gradient = [&](const Point& y) -> Point { return (y - x) / tv + f.gradient(y); };
  }
  MinimizeOptions opts;
  opts.restarts = restarts;
  opts.restart_box = restart_box;
  opts.seed = hash_point(x, std::bit_cast<std::uint64_t>(tv));
  const MinimizeResult r = multistart_minimize(q, {x}, opts);
  return {r.argmin, r.value};
}

}  // namespace hjprox
