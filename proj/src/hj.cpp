#include "hjprox/hj.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

#include "hjprox/optimize.hpp"
#include "hjprox/rng.hpp"

namespace hjprox {

ForwardResult forward_solve(const PriorSpec& p, const Point& x, TimeParam t, const ForwardOptions& opts) {
  if (!x.allFinite()) throw InvalidArgument("forward_solve: x must be finite");
  if (const auto d = p.fixed_dim()) require_dim(x, *d);
  const int restarts = opts.restarts > 0 ? opts.restarts : (p.is_convex() ? 1 : 8);
  const auto [y, value] = minimize_quadratic_plus(p.objective(), x, t, restarts, opts.restart_box);
  return ForwardResult{value, y, (x - y) / t.value()};
}

bool looks_differentiable(const ScalarField& S, const Point& x, double h) {
  const double s0 = S(x);
  Point probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double fwd = (S(probe) - s0) / h;
    probe[i] = x[i] - h;
    const double bwd = (s0 - S(probe)) / h;
    probe[i] = x[i];
    if (std::abs(fwd - bwd) > 1e-3 * (1.0 + std::abs(s0))) return false;
  }
  return true;
}

double characteristics_residual(const PriorSpec& p, const Point& x, TimeParam t, CharacteristicsForm form) {
  const double tv = t.value();
  double s = 0.0;
  Point g;
  if (p.has_closed_form(x, t)) {
    if (near_nondiff(p, x, t, 1e-9)) {
      throw Nondifferentiable("characteristics_residual: S has a kink at x");
    }
    s = eval_S_closed(p, x, t);
    g = eval_grad_S_closed(p, x, t);
  } else {
    auto S = [&](const Point& z) { return forward_solve(p, z, t).value; };
    if (!looks_differentiable(S, x)) {
      throw Nondifferentiable("characteristics_residual: one-sided differences of S disagree at x");
    }
    const ForwardResult fr = forward_solve(p, x, t);
    s = fr.value;
    g = fr.grad_estimate;
  }
  const double k = form == CharacteristicsForm::TimeScaled ? tv / 2.0 : 1.0 / (2.0 * tv);
  return std::abs(s - (k * g.squaredNorm() + eval_J(p, x - tv * g)));
}

BackwardQuery BackwardQuery::from_prior(const PriorSpec& p, TimeParam t, std::size_t dim, double a) {
  if (const auto d = p.fixed_dim(); d && *d != dim) throw DimensionMismatch(*d, dim);
  BackwardQuery q;
  // closed forms where they exist, numerical Lax-Oleinik otherwise
  q.S = [p, t](const Point& x) {
    return p.has_closed_form(x, t) ? eval_S_closed(p, x, t) : forward_solve(p, x, t).value;
  };
  q.grad_S = [p, t](const Point& x) -> Point {
    if (!p.has_closed_form(x, t)) return forward_solve(p, x, t).grad_estimate;
    try {
      return eval_grad_S_closed(p, x, t);
    } catch (const Nondifferentiable&) {
      // any element of the superdifferential will do; central differences
      // give the midpoint one for the kinks we know about
      return finite_diff_gradient([&](const Point& z) { return eval_S_closed(p, z, t); }, x, 1e-7);
    }
  };
  q.psi = [S = q.S, t](const Point& x) { return 0.5 * x.squaredNorm() - t.value() * S(x); };
  q.grad_psi = [g = q.grad_S, t](const Point& x) -> Point { return x - t.value() * g(x); };

  // Lipschitz estimate of S from a fixed probe set over the data box.
  const Box data = Box::cube(dim, a);
  const CounterRng rng(0x5eed0fb0c5ULL);
  double lip = 0.0;
  for (std::uint64_t i = 0; i < 256; ++i) {
    Point u(static_cast<Eigen::Index>(dim));
    for (Eigen::Index j = 0; j < u.size(); ++j) u[j] = rng.split(i).uniform(static_cast<std::uint64_t>(j));
    lip = std::max(lip, q.grad_S(data.from_unit(u)).norm());
  }
  for (const Point& corner : {data.lower, data.upper}) lip = std::max(lip, q.grad_S(corner).norm());
  q.search_box = Box::cube(dim, a + 2.0 * t.value() * std::max(lip, 1.0));
  return q;
}

BackwardQuery BackwardQuery::from_psi(ScalarField psi, VectorField grad_psi, Box search_box) {
  BackwardQuery q;
  q.psi = std::move(psi);
  q.grad_psi = std::move(grad_psi);
  q.search_box = std::move(search_box);
  return q;
}

double backward_solve(const BackwardQuery& q, const Point& y, TimeParam t, std::optional<BackwardForm> form) {
  const double tv = t.value();
  const BackwardForm f = form ? *form : (q.psi ? BackwardForm::Conjugate : BackwardForm::Sup);
  require_dim(y, q.search_box.dim());
  MinimizeOptions opts;
  opts.bounds = q.search_box;
  opts.restarts = std::max(1, q.restarts);
  opts.restart_box = q.search_box;
  opts.seed = hash_point(y, 0xbac4);

  Objective obj;
  if (f == BackwardForm::Sup) {
    if (!q.S) throw InvalidArgument("backward_solve: sup form needs S");
    obj.value = [&](const Point& x) { return -q.S(x) + (x - y).squaredNorm() / (2.0 * tv); };
    if (q.grad_S) obj.gradient = [&](const Point& x) -> Point { return -q.grad_S(x) + (x - y) / tv; };
  } else {
    if (!q.psi) throw InvalidArgument("backward_solve: conjugate form needs psi");
    obj.value = [&](const Point& x) { return q.psi(x) - x.dot(y); };
    if (q.grad_psi) obj.gradient = [&](const Point& x) -> Point { return q.grad_psi(x) - y; };
  }
  const MinimizeResult r = multistart_minimize(obj, {y}, opts);
  if (r.left_bounds) {
    throw UnboundedConjugate("backward_solve: ascent left the search box; the supremum is likely +inf");
  }
  if (f == BackwardForm::Sup) return -r.value;
  return (-r.value - 0.5 * y.squaredNorm()) / tv;
}

BackwardSolver::BackwardSolver(BackwardQuery q, TimeParam t, std::optional<BackwardForm> form)
    : query_(std::move(q)), t_(t), form_(form) {}

double BackwardSolver::operator()(const Point& y) const {
  std::string key(static_cast<std::size_t>(y.size()) * sizeof(double), '\0');
  std::memcpy(key.data(), y.data(), key.size());
  {
    std::lock_guard<std::mutex> lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  const double v = backward_solve(query_, y, t_, form_);
  std::lock_guard<std::mutex> lock(mutex_);
  cache_.emplace(std::move(key), v);
  return v;
}

std::size_t BackwardSolver::cache_size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return cache_.size();
}

double roundtrip_check(const PriorSpec& p, const Point& x, TimeParam t, const Grid& grid) {
  const double a = std::max(grid.box().upper.cwiseAbs().maxCoeff(), grid.box().lower.cwiseAbs().maxCoeff());
  BackwardSolver jbvs(BackwardQuery::from_prior(p, t, grid.dim(), a), t);
  return roundtrip_check(p, x, t, grid, jbvs);
}

double roundtrip_check(const PriorSpec& p, const Point& x, TimeParam t, const Grid& grid,
                       const BackwardSolver& jbvs) {
  require_dim(x, grid.dim());
  const double tv = t.value();
  auto outer = [&](const Point& y) { return (x - y).squaredNorm() / (2.0 * tv) + jbvs(y); };
  auto [y, best] = grid_minimize(outer, grid);
  // refine inside one grid cell around the best node
  for (int sweep = 0; sweep < 4; ++sweep) {
    bool improved = false;
    for (Eigen::Index j = 0; j < y.size(); ++j) {
      const double h = grid.spacing(static_cast<std::size_t>(j));
      Point probe = y;
      auto line = [&](double v) {
        probe[j] = v;
        return outer(probe);
      };
      const auto [vj, fv] = boost::math::tools::brent_find_minima(line, y[j] - h, y[j] + h,
                                                                   std::numeric_limits<double>::digits);
      if (fv < best) {
        y[j] = vj;
        best = fv;
        improved = true;
      }
    }
    if (!improved) break;
  }
  const double s = p.has_closed_form(x, t) ? eval_S_closed(p, x, t) : forward_solve(p, x, t).value;
  return std::abs(best - s);
}

}  // namespace hjprox
