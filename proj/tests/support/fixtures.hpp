#pragma once

#include <initializer_list>
#include <vector>

#include "hjprox/dataset.hpp"
#include "hjprox/priors.hpp"
#include "hjprox/rng.hpp"

namespace fixtures {

inline hjprox::Point pt(std::initializer_list<double> v) {
  hjprox::Point p(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) p[i++] = x;
  return p;
}

inline hjprox::Point random_point(const hjprox::CounterRng& rng, std::uint64_t k, std::size_t dim, double a) {
  hjprox::Point p(static_cast<Eigen::Index>(dim));
  for (std::size_t j = 0; j < dim; ++j) p[static_cast<Eigen::Index>(j)] = rng.uniform(k * 16 + j, -a, a);
  return p;
}

/// Closed-form samples at the given points.
inline hjprox::Dataset exact_dataset(const hjprox::PriorSpec& p, const std::vector<hjprox::Point>& xs, double t,
                                     double a = 4.0) {
  hjprox::Dataset ds;
  ds.t = t;
  ds.dim = static_cast<std::size_t>(xs.front().size());
  ds.a = a;
  const hjprox::TimeParam tp(t);
  for (const auto& x : xs) ds.samples.push_back({x, hjprox::eval_S_closed(p, x, tp), hjprox::eval_grad_S_closed(p, x, tp)});
  return ds;
}

/// Closed-form samples at random differentiable points of [-a, a]^dim.
inline hjprox::Dataset random_exact_dataset(const hjprox::PriorSpec& p, std::size_t dim, std::size_t count, double t,
                                            double a, std::uint64_t seed) {
  const hjprox::CounterRng rng(seed);
  std::vector<hjprox::Point> xs;
  for (std::uint64_t k = 0; xs.size() < count; ++k) {
    hjprox::Point x = random_point(rng, k, dim, a);
    if (!hjprox::near_nondiff(p, x, hjprox::TimeParam(t), 1e-6)) xs.push_back(std::move(x));
  }
  return exact_dataset(p, xs, t, a);
}

}  // namespace fixtures
