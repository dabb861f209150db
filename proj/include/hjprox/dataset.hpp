#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "hjprox/core.hpp"

namespace hjprox {

/// One observation {x, S(x,t), grad S(x,t)} of the Hamilton-Jacobi solution.
struct SampleTriplet {
  Point x;
  double s_value = 0.0;
  Point s_grad;

  /// y = x - t grad S(x,t), the proximal point of x.
  Point prox_point(TimeParam t) const { return x - t.value() * s_grad; }
};

struct Dataset {
  double t = 1.0;
  std::size_t dim = 0;
  double a = 1.0;
  std::uint64_t seed = 0;
  std::vector<SampleTriplet> samples;

  /// Checks shared dimension, finiteness and finiteness of the derived y.
  void validate() const;
};

/// Header line `dim,t,a,seed,count`, then one `x_1..x_n,S,g_1..g_n` row per
/// sample in shortest round-trip decimal.
void write_dataset(std::ostream& os, const Dataset& ds);
Dataset read_dataset(std::istream& is);
void save_dataset(const std::filesystem::path& path, const Dataset& ds);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace hjprox
