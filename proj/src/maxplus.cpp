#include "hjprox/maxplus.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "hjprox/csv.hpp"
#include "hjprox/rng.hpp"

namespace hjprox {
namespace {

// Unique positive root of x^(d+1) = x + 1.
double generalised_golden(std::size_t dim) {
  double x = 2.0;
  const double e = static_cast<double>(dim + 1);
  for (int i = 0; i < 100; ++i) {
    const double f = std::pow(x, e) - x - 1.0;
    const double df = e * std::pow(x, e - 1.0) - 1.0;
    const double nx = x - f / df;
    if (std::abs(nx - x) < 1e-16) break;
    x = nx;
  }
  return x;
}

std::vector<Point> box_corners(const Box& box) {
  std::vector<Point> out;
  const std::size_t n = box.dim();
  if (n > 10) return out;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    Point c(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) {
      const auto i = static_cast<Eigen::Index>(j);
      c[i] = (mask >> j) & 1 ? box.upper[i] : box.lower[i];
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<Point> box_samples(const Box& box, std::size_t n_samples, std::uint64_t seed) {
  std::vector<Point> pts = kronecker_points(box.dim(), n_samples, seed);
  for (auto& u : pts) u = box.from_unit(u);
  for (auto& c : box_corners(box)) pts.push_back(std::move(c));
  return pts;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

std::vector<Point> kronecker_points(std::size_t dim, std::size_t count, std::uint64_t seed) {
  if (dim == 0) throw InvalidArgument("kronecker_points: dim must be >= 1");
  const double g = generalised_golden(dim);
  const auto n = static_cast<Eigen::Index>(dim);
  Point step(n), shift(n);
  const CounterRng rng(seed);
  for (Eigen::Index j = 0; j < n; ++j) {
    step[j] = std::fmod(1.0 / std::pow(g, static_cast<double>(j + 1)), 1.0);
    shift[j] = rng.uniform(static_cast<std::uint64_t>(j));
  }
  std::vector<Point> pts(count, Point(n));
  for (std::size_t i = 0; i < count; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double v = shift[j] + static_cast<double>(i + 1) * step[j];
      pts[i][j] = v - std::floor(v);
    }
  }
  return pts;
}

double minorant_psi(const MinorantModel& m, const Point& y) {
  return m.t * eval_minorant(m, y) + 0.5 * y.squaredNorm();
}

double eps_inf(const ScalarField& target, const ScalarField& approx, const Box& box, std::size_t n_samples,
               std::uint64_t seed, const std::vector<Point>& extra) {
  std::vector<Point> pts = box_samples(box, n_samples, seed);
  pts.insert(pts.end(), extra.begin(), extra.end());
  std::vector<double> err(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) {
    err[i] = std::abs(checked(target(pts[i]), pts[i], "eps_inf target") -
                      checked(approx(pts[i]), pts[i], "eps_inf approximation"));
  });
  return err.empty() ? 0.0 : *std::max_element(err.begin(), err.end());
}

double eps_inf(const ScalarField& target, const MinorantModel& m, const Box& box, std::size_t n_samples,
               std::uint64_t seed) {
  std::vector<Point> extra;
  for (const auto& a : m.anchors)
    if (box.contains(a.y)) extra.push_back(a.y);
  return eps_inf(target, [&](const Point& y) { return minorant_psi(m, y); }, box, n_samples, seed, extra);
}

double hessian_integral(const ScalarField& psi, const Box& box, std::size_t n_mc, double h, std::uint64_t seed) {
  if (n_mc < 100) throw InvalidArgument("hessian_integral: need at least 100 samples");
  const std::size_t n = box.dim();
  const auto N = static_cast<Eigen::Index>(n);
  const CounterRng rng(seed);
  std::vector<double> vals(n_mc, 0.0);
  std::vector<char> ok(n_mc, 1);
  parallel_for(n_mc, [&](std::size_t s) {
    const CounterRng stream = rng.split(s);
    Point u(N);
    for (Eigen::Index j = 0; j < N; ++j) u[j] = stream.uniform(static_cast<std::uint64_t>(j));
    const Point y = box.from_unit(u);
    const double step = h > 0.0 ? h : 1e-4 * (1.0 + y.norm());
    Eigen::MatrixXd H(N, N);
    const double f0 = psi(y);
    for (Eigen::Index i = 0; i < N; ++i) {
      Point a = y, b = y;
      a[i] += step;
      b[i] -= step;
      H(i, i) = (psi(a) - 2.0 * f0 + psi(b)) / (step * step);
      for (Eigen::Index j = i + 1; j < N; ++j) {
        Point pp = y, pm = y, mp = y, mm = y;
        pp[i] += step, pp[j] += step;
        pm[i] += step, pm[j] -= step;
        mp[i] -= step, mp[j] += step;
        mm[i] -= step, mm[j] -= step;
        H(i, j) = H(j, i) = (psi(pp) - psi(pm) - psi(mp) + psi(mm)) / (4.0 * step * step);
      }
    }
    if (!H.allFinite()) {
      ok[s] = 0;
      return;
    }
    H += Eigen::MatrixXd::Identity(N, N);
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(H, Eigen::EigenvaluesOnly).eigenvalues();
    vals[s] = std::sqrt(ev.cwiseMax(1e-12).prod());
  });
  std::size_t good = 0;
  double sum = 0.0;
  for (std::size_t s = 0; s < n_mc; ++s) {
    if (ok[s]) {
      ++good;
      sum += vals[s];
    }
  }
  if (n_mc - good > n_mc / 100) throw DegenerateInput("hessian_integral: Hessian failed at more than 1% of samples");
  return box.volume() * sum / static_cast<double>(good);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("loglog_slope: need two or more matched points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

std::vector<ErrorReport> scaling_experiment(const PriorSpec& p, TimeParam t, const std::vector<std::size_t>& dims,
                                            const std::vector<std::size_t>& K_list, std::size_t trials,
                                            std::uint64_t seed, const ScalingOptions& opts) {
  if (K_list.empty() || trials == 0 || dims.empty()) throw InvalidArgument("scaling_experiment: empty sweep");
  for (std::size_t i = 0; i < K_list.size(); ++i) {
    if (K_list[i] == 0 || (i > 0 && K_list[i] <= K_list[i - 1])) {
      throw InvalidArgument("scaling_experiment: K list must be positive and strictly increasing");
    }
  }
  const double tv = t.value();
  std::vector<ErrorReport> out;
  for (std::size_t dim : dims) {
    const Box box = Box::cube(dim, opts.a);
    auto psi = [&](const Point& y) { return tv * eval_Jbvs_closed(p, y, t) + 0.5 * y.squaredNorm(); };
    const double integrand = hessian_integral(psi, box, opts.hessian_samples, 0.0, mix64(seed ^ dim));
    std::vector<double> Ks, eps;
    for (std::size_t K : K_list) {
      std::vector<double> per_trial;
      for (std::size_t trial = 0; trial < trials; ++trial) {
        const std::uint64_t key = mix64(seed ^ mix64(dim * 1000003u + K * 131u + trial));
        Dataset ds;
        ds.t = tv;
        ds.dim = dim;
        ds.a = opts.a;
        ds.seed = key;
        std::vector<double> j;
        for (Point u : kronecker_points(dim, K, key)) {
          const Point x = box.from_unit(u);
          ds.samples.push_back({x, eval_S_closed(p, x, t), eval_grad_S_closed(p, x, t)});
          j.push_back(eval_Jbvs_closed(p, ds.samples.back().prox_point(t), t));
        }
        const MinorantModel m = build_minorant(ds, j, MinorantMode::PQM, opts.alpha, JSource::ClosedForm);
        per_trial.push_back(eps_inf(psi, m, box, opts.eval_points, mix64(key + 1)));
      }
      ErrorReport r;
      r.dim = dim;
      r.K = K;
      r.eps_inf = median(per_trial);
      r.box = box;
      r.integrand_estimate = integrand;
      Ks.push_back(static_cast<double>(K));
      eps.push_back(r.eps_inf);
      r.slope_running = Ks.size() >= 2 ? loglog_slope(Ks, eps) : std::numeric_limits<double>::quiet_NaN();
      out.push_back(r);
    }
    const double slope = Ks.size() >= 2 ? loglog_slope(Ks, eps) : std::numeric_limits<double>::quiet_NaN();
    for (auto& r : out)
      if (r.dim == dim) r.scaling_exponent = slope;
  }
  return out;
}

void write_scaling_report(std::ostream& os, const std::vector<ErrorReport>& reports) {
  os << "dim,K,eps_inf,slope_running\n";
  for (const auto& r : reports) {
    csv::write_row(os, {std::to_string(r.dim), std::to_string(r.K), csv::format(r.eps_inf), csv::format(r.slope_running)});
  }
}

std::pair<double, double> upper_bound_check(const ScalarField& jtilde, const ScalarField& jbvs,
                                            const MinorantModel& pqm, const Box& box, std::size_t n_samples,
                                            std::uint64_t seed) {
  std::vector<Point> pts = box_samples(box, n_samples, seed);
  for (const auto& a : pqm.anchors)
    if (box.contains(a.y)) pts.push_back(a.y);
  std::vector<double> lhs(pts.size()), rhs(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) {
    const double jp = eval_minorant(pqm, pts[i]);
    lhs[i] = std::abs(checked(jbvs(pts[i]), pts[i], "J_BVS") - jp);
    rhs[i] = std::abs(checked(jtilde(pts[i]), pts[i], "J tilde") - jp);
  });
  return {pqm.t * *std::max_element(lhs.begin(), lhs.end()), pqm.t * *std::max_element(rhs.begin(), rhs.end())};
}

}  // namespace hjprox
