#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "hjprox/hj.hpp"
#include "hjprox/maxplus.hpp"

using namespace hjprox;
using fixtures::pt;

namespace {
std::vector<double> closed_j(const PriorSpec& p, const Dataset& ds) {
  std::vector<double> j;
  for (const auto& s : ds.samples) j.push_back(eval_Jbvs_closed(p, s.prox_point(TimeParam(ds.t)), TimeParam(ds.t)));
  return j;
}
}  // namespace

TEST_CASE("kronecker points fill the unit cube evenly") {
  const auto pts = kronecker_points(2, 4096, 3);
  REQUIRE(pts.size() == 4096);
  // every cell of an 8x8 partition receives close to 64 points
  std::vector<int> cells(64, 0);
  for (const auto& p : pts) {
    CHECK(p.minCoeff() >= 0.0);
    CHECK(p.maxCoeff() < 1.0);
    ++cells[static_cast<std::size_t>(std::floor(p[0] * 8) * 8 + std::floor(p[1] * 8))];
  }
  for (int c : cells) CHECK(std::abs(c - 64) <= 8);
  CHECK((kronecker_points(2, 5, 3)[4].array() == pts[4].array()).all());
}

TEST_CASE("eps_inf examples") {
  const Box unit = Box::cube(1, 1.0);
  auto sq = [](const Point& y) { return y.squaredNorm(); };
  CHECK(eps_inf(sq, sq, unit, 1000, 1) == 0.0);
  CHECK(eps_inf(sq, [](const Point&) { return 0.0; }, unit, 1000, 1) == 1.0);
  CHECK_THROWS_AS(eps_inf(sq, [](const Point&) { return std::nan(""); }, unit, 10, 1), NumericFailure);
}

TEST_CASE("eps_inf of a four-anchor PQM matches a dense grid") {
  const PriorSpec na = PriorSpec::neg_abs_1d();
  const TimeParam t(1.0);
  const Dataset ds = fixtures::exact_dataset(na, {pt({-3}), pt({-1}), pt({0.5}), pt({2.5})}, 1.0);
  const auto m = build_minorant(ds, closed_j(na, ds), MinorantMode::PQM, 0.5);
  auto psi = [&](const Point& y) { return eval_Jbvs_closed(na, y, t) + 0.5 * y.squaredNorm(); };
  const Box box = Box::cube(1, 4.0);
  const double est = eps_inf(psi, m, box, 4096, 2);
  const Grid dense(1, -4.0, 4.0, 100001);
  double oracle = 0.0;
  for (std::size_t i = 0; i < dense.size(); ++i) {
    const Point y = dense.node(i);
    oracle = std::max(oracle, std::abs(psi(y) - minorant_psi(m, y)));
  }
  CHECK(est > 0.0);
  CHECK(std::abs(est - oracle) <= 0.01 * oracle);
}

TEST_CASE("eps_inf never grows along nested anchor sets") {
  const PriorSpec cq = PriorSpec::concave_quadratic(0.25);
  const TimeParam t(1.0);
  auto psi = [&](const Point& y) { return eval_Jbvs_closed(cq, y, t) + 0.5 * y.squaredNorm(); };
  for (std::uint64_t seq = 0; seq < 10; ++seq) {
    const Dataset full = fixtures::random_exact_dataset(cq, 2, 64, 1.0, 1.5, 40 + seq);
    const auto j = closed_j(cq, full);
    double prev = HUGE_VAL;
    for (std::size_t K : {4u, 8u, 16u, 32u, 64u}) {
      Dataset part = full;
      part.samples.resize(K);
      const auto m = build_minorant(part, std::vector<double>(j.begin(), j.begin() + static_cast<long>(K)),
                                    MinorantMode::PQM, 0.25);
      const double e = eps_inf(psi, m, Box::cube(2, 1.0), 2000, 9);
      CHECK(e <= prev + 1e-15);
      prev = e;
    }
  }
}

TEST_CASE("hessian_integral examples") {
  CHECK(hessian_integral([](const Point&) { return 0.0; }, Box{pt({0}), pt({1})}, 200, 0.0, 1) == doctest::Approx(1.0));
  CHECK(hessian_integral([](const Point& y) { return 0.5 * y.squaredNorm(); }, Box{pt({0}), pt({1})}, 200, 0.0, 1) ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));
  CHECK(hessian_integral([](const Point& y) { return 0.5 * y.squaredNorm(); }, Box{pt({0, 0}), pt({1, 1})}, 200, 0.0,
                         1) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(hessian_integral([](const Point& y) { return 3.0 * y[0] - y[1] + 2.0; }, Box::cube(2, 1.5), 500, 0.0, 4) ==
        doctest::Approx(9.0).epsilon(1e-6));
  CHECK_THROWS_AS(hessian_integral([](const Point&) { return 0.0; }, Box::cube(1, 1.0), 99, 0.0, 1), InvalidArgument);
  CHECK_THROWS_AS(hessian_integral([](const Point& y) { return y[0] > 0.9 ? std::nan("") : 0.0; }, Box::cube(1, 1.0),
                                   1000, 0.0, 1),
                  DegenerateInput);
}

TEST_CASE("scaling experiment follows the inverse power law") {
  const auto reports = scaling_experiment(PriorSpec::concave_quadratic(0.25), TimeParam(1), {1, 2},
                                          {16, 32, 64, 128, 256}, 5, 2024);
  REQUIRE(reports.size() == 10);
  CHECK(reports[0].scaling_exponent >= -2.4);
  CHECK(reports[0].scaling_exponent <= -1.6);
  CHECK(reports[5].scaling_exponent >= -1.3);
  CHECK(reports[5].scaling_exponent <= -0.7);
  CHECK(std::isnan(reports[0].slope_running));
  CHECK(reports[4].slope_running == reports[4].scaling_exponent);
  for (const auto& r : reports) CHECK(r.eps_inf >= 0.0);
  // Psi = |y|^2/4, so det(hess + I)^(1/2) = 1.5^(n/2)
  CHECK(reports[0].integrand_estimate == doctest::Approx(2.0 * std::sqrt(1.5)).epsilon(1e-6));
  CHECK(reports[5].integrand_estimate == doctest::Approx(6.0).epsilon(1e-6));

  std::ostringstream os;
  write_scaling_report(os, reports);
  CHECK(os.str().rfind("dim,K,eps_inf,slope_running\n1,16,", 0) == 0);
}

TEST_CASE("scaling experiment validates its sweep") {
  CHECK_THROWS_AS(scaling_experiment(PriorSpec::concave_quadratic(0.25), TimeParam(1), {1}, {8, 4}, 1, 0),
                  InvalidArgument);
}

TEST_CASE("loglog slope recovers exact power laws") {
  CHECK(loglog_slope({1, 2, 4, 8}, {1, 0.25, 0.0625, 0.015625}) == doctest::Approx(-2.0));
}

TEST_CASE("upper bound check") {
  const TimeParam t(1.0);
  const PriorSpec na = PriorSpec::neg_abs_1d();
  const Dataset ds = fixtures::exact_dataset(na, {pt({-3}), pt({-1}), pt({0.5}), pt({2.5})}, 1.0);
  const auto pam = build_minorant(ds, closed_j(na, ds), MinorantMode::PQM, 1e-3);
  auto jbvs = [&](const Point& y) { return eval_Jbvs_closed(na, y, t); };
  auto [l0, r0] = upper_bound_check(jbvs, jbvs, pam, Box::cube(1, 4.0), 2000, 1);
  CHECK(l0 == r0);
  auto [l1, r1] = upper_bound_check([&](const Point& y) { return eval_J(na, y); }, jbvs, pam, Box::cube(1, 4.0), 2000, 1);
  CHECK(std::isfinite(l1));
  CHECK(l1 <= r1 + 1e-6);

  const PriorSpec hub = PriorSpec::concave_quadratic(0.25, 1.5);
  const BackwardSolver jb(BackwardQuery::from_prior(hub, t, 2, 1.0), t);
  Dataset d2;
  d2.t = 1.0;
  d2.dim = 2;
  d2.a = 1.0;
  std::vector<double> j;
  for (const auto& u : kronecker_points(2, 32, 5)) {
    const Point x = Box::cube(2, 1.0).from_unit(u);
    const auto f = forward_solve(hub, x, t);
    d2.samples.push_back({x, f.value, f.grad_estimate});
    j.push_back(jb(d2.samples.back().prox_point(t)));
  }
  const auto pqm = build_minorant(d2, j, MinorantMode::PQM, 0.25);
  auto [l2, r2] = upper_bound_check([&](const Point& y) { return eval_J(hub, y); }, [&](const Point& y) { return jb(y); },
                                    pqm, Box::cube(2, 1.0), 400, 3);
  CHECK(l2 <= r2 + 1e-6);
}
