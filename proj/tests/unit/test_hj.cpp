#include <doctest.h>

#include <cmath>

#include "hjprox/hj.hpp"
#include "hjprox/rng.hpp"

using namespace hjprox;

namespace {
Point pt(std::initializer_list<double> v) {
  Point p(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) p[i++] = x;
  return p;
}
}  // namespace

TEST_CASE("forward_solve examples") {
  const auto z = forward_solve(PriorSpec::zero(), pt({1.5, -2}), TimeParam(1));
  CHECK(z.value == doctest::Approx(0.0));
  CHECK((z.minimizer - pt({1.5, -2})).norm() <= 1e-12);
  CHECK(z.grad_estimate.norm() <= 1e-12);

  const auto na = forward_solve(PriorSpec::neg_abs_1d(), pt({2}), TimeParam(1));
  CHECK(std::abs(na.value + 2.5) <= 1e-9);
  CHECK(std::abs(na.minimizer[0] - 3.0) <= 1e-6);

  const auto mp = forward_solve(PriorSpec::min_plus_two_wells(2), pt({3, 0}), TimeParam(1));
  CHECK(std::abs(mp.value - 1.0) <= 1e-7);
}

TEST_CASE("forward_solve result is internally consistent") {
  const PriorSpec p = PriorSpec::min_plus_two_wells(2);
  const auto r = forward_solve(p, pt({0.4, -1.3}), TimeParam(0.7));
  CHECK(r.value == (pt({0.4, -1.3}) - r.minimizer).squaredNorm() / 1.4 + eval_J(p, r.minimizer));
  CHECK((r.grad_estimate - (pt({0.4, -1.3}) - r.minimizer) / 0.7).norm() <= 1e-15);
}

TEST_CASE("forward_solve agrees with closed forms") {
  const std::vector<std::pair<PriorSpec, std::size_t>> cases = {
      {PriorSpec::l1(), 2},           {PriorSpec::neg_l1(), 2},
      {PriorSpec::neg_abs_1d(), 1},   {PriorSpec::min_plus_two_wells(2), 2},
      {PriorSpec::concave_quadratic(0.25), 2}, {PriorSpec::min_plus_two_wells(3), 3}};
  const CounterRng rng(77);
  for (const auto& [p, dim] : cases) {
    INFO(to_string(p.kind));
    for (std::uint64_t k = 0; k < 40; ++k) {
      Point x(static_cast<Eigen::Index>(dim));
      for (std::size_t j = 0; j < dim; ++j) x[static_cast<Eigen::Index>(j)] = rng.uniform(8 * k + j, -3, 3);
      const TimeParam t(0.5 + rng.uniform(8 * k + 7));
      CHECK(std::abs(forward_solve(p, x, t).value - eval_S_closed(p, x, t)) <= 1e-7);
    }
  }
}

TEST_CASE("forward gradient matches finite differences of the forward value") {
  const PriorSpec p = PriorSpec::min_plus_two_wells(2);
  const TimeParam t(1.0);
  const CounterRng rng(8);
  int checked = 0;
  for (std::uint64_t k = 0; checked < 20; ++k) {
    const Point x = pt({rng.uniform(2 * k, -3, 3), rng.uniform(2 * k + 1, -3, 3)});
    if (near_nondiff(p, x, t, 1e-2)) continue;
    ++checked;
    const auto r = forward_solve(p, x, t);
    const Point fd = finite_diff_gradient([&](const Point& z) { return forward_solve(p, z, t).value; }, x, 1e-4);
    CHECK((r.grad_estimate - fd).cwiseAbs().maxCoeff() <= 1e-4);
  }
}

TEST_CASE("characteristics residual examples") {
  CHECK(characteristics_residual(PriorSpec::zero(), pt({1, 2}), TimeParam(1)) == doctest::Approx(0.0));
  CHECK(characteristics_residual(PriorSpec::neg_abs_1d(), pt({2}), TimeParam(1)) <= 1e-9);
  CHECK(characteristics_residual(PriorSpec::l1(), pt({2, 3}), TimeParam(1)) <= 1e-7);
  CHECK_THROWS_AS(characteristics_residual(PriorSpec::neg_abs_1d(), pt({0}), TimeParam(1)), Nondifferentiable);
}

TEST_CASE("only the time-scaled characteristics form vanishes") {
  // at t = 2, x = 2: S = -3, grad S = -1, y = 4, J(y) = -4
  const PriorSpec p = PriorSpec::neg_abs_1d();
  CHECK(characteristics_residual(p, pt({2}), TimeParam(2), CharacteristicsForm::TimeScaled) <= 1e-9);
  CHECK(characteristics_residual(p, pt({2}), TimeParam(2), CharacteristicsForm::AsPrinted) ==
        doctest::Approx(0.75));
  const PriorSpec mp = PriorSpec::min_plus_two_wells(2);
  CHECK(characteristics_residual(mp, pt({2.2, -0.4}), TimeParam(0.6)) <= 1e-9);
}

TEST_CASE("looks_differentiable flags the kink of the negative absolute value") {
  const PriorSpec p = PriorSpec::neg_abs_1d();
  auto S = [&](const Point& x) { return eval_S_closed(p, x, TimeParam(1)); };
  CHECK_FALSE(looks_differentiable(S, pt({0})));
  CHECK(looks_differentiable(S, pt({0.5})));
}

TEST_CASE("backward_solve examples") {
  const auto zq = BackwardQuery::from_prior(PriorSpec::zero(), TimeParam(1), 2, 3.0);
  CHECK(std::abs(backward_solve(zq, pt({1.2, -0.7}), TimeParam(1))) <= 1e-9);

  const auto q = BackwardQuery::from_prior(PriorSpec::neg_abs_1d(), TimeParam(1), 1, 4.0);
  CHECK(std::abs(backward_solve(q, pt({0}), TimeParam(1)) + 0.5) <= 1e-7);
  CHECK(std::abs(backward_solve(q, pt({-3}), TimeParam(1)) + 3.0) <= 1e-7);
}

TEST_CASE("backward solution lower-bounds the prior and matches the closed form") {
  const PriorSpec p = PriorSpec::neg_abs_1d();
  const TimeParam t(1.0);
  const auto q = BackwardQuery::from_prior(p, t, 1, 4.0);
  const CounterRng rng(4);
  for (std::uint64_t k = 0; k < 500; ++k) {
    const Point y = pt({rng.uniform(k, -4, 4)});
    const double jb = backward_solve(q, y, t);
    CHECK(jb <= eval_J(p, y) + 1e-7);
    CHECK(std::abs(jb - eval_Jbvs_closed(p, y, t)) <= 1e-6);
    if (std::abs(y[0]) >= 1.0) CHECK(std::abs(jb - eval_J(p, y)) <= 1e-6);
  }
}

TEST_CASE("sup and conjugate forms agree") {
  const TimeParam t(1.0);
  for (const PriorSpec& p : {PriorSpec::neg_abs_1d(), PriorSpec::min_plus_two_wells(2)}) {
    const std::size_t dim = p.kind == PriorKind::NegAbs1D ? 1 : 2;
    const auto q = BackwardQuery::from_prior(p, t, dim, 6.0);
    const CounterRng rng(12);
    for (std::uint64_t k = 0; k < 200; ++k) {
      Point y(static_cast<Eigen::Index>(dim));
      for (std::size_t j = 0; j < dim; ++j) y[static_cast<Eigen::Index>(j)] = rng.uniform(4 * k + j, -3, 3);
      const double a = backward_solve(q, y, t, BackwardForm::Sup);
      const double b = backward_solve(q, y, t, BackwardForm::Conjugate);
      CHECK(std::abs(a - b) <= 1e-7);
    }
  }
}

TEST_CASE("t J_BVS is semiconvex with unit constant") {
  const TimeParam t(1.0);
  const PriorSpec p = PriorSpec::min_plus_two_wells(2);
  const BackwardSolver jb(BackwardQuery::from_prior(p, t, 2, 3.0), t);
  auto phi = [&](const Point& y) { return t.value() * jb(y) + 0.5 * y.squaredNorm(); };
  const CounterRng rng(55);
  for (std::uint64_t k = 0; k < 1000; ++k) {
    const Point y1 = pt({rng.uniform(5 * k, -3, 3), rng.uniform(5 * k + 1, -3, 3)});
    const Point y2 = pt({rng.uniform(5 * k + 2, -3, 3), rng.uniform(5 * k + 3, -3, 3)});
    const double lam = rng.uniform(5 * k + 4);
    CHECK(phi(lam * y1 + (1 - lam) * y2) <= lam * phi(y1) + (1 - lam) * phi(y2) + 1e-6);
  }
}

TEST_CASE("unbounded conjugate is detected") {
  // psi linear: sup_x <x, y> - <x, 1> is unbounded unless y = 1
  auto q = BackwardQuery::from_psi([](const Point& x) { return x.sum(); },
                                   [](const Point& x) -> Point { return Point::Ones(x.size()); },
                                   Box::cube(1, 5.0));
  CHECK_THROWS_AS(backward_solve(q, pt({3}), TimeParam(1)), UnboundedConjugate);
}

TEST_CASE("backward cache is keyed on exact bits") {
  const TimeParam t(1.0);
  const BackwardSolver jb(BackwardQuery::from_prior(PriorSpec::neg_abs_1d(), t, 1, 3.0), t);
  const double a = jb(pt({0.25}));
  const double b = jb(pt({0.25}));
  CHECK(a == b);
  CHECK(jb.cache_size() == 1);
  jb(pt({std::nextafter(0.25, 1.0)}));
  CHECK(jb.cache_size() == 2);
}

TEST_CASE("roundtrip examples") {
  const TimeParam t(1.0);
  CHECK(roundtrip_check(PriorSpec::zero(), pt({0.4}), t, Grid(1, -4.0, 4.0, 401)) <= 1e-9);
  CHECK(roundtrip_check(PriorSpec::neg_abs_1d(), pt({0.3}), t, Grid(1, -4.0, 4.0, 801)) <= 1e-4);
  CHECK(roundtrip_check(PriorSpec::l1(), pt({2.0}), t, Grid(1, -4.0, 4.0, 801)) <= 1e-4);
}
