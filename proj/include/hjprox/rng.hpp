#pragma once

#include <cstdint>

namespace hjprox {

/// SplitMix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based generator: the k-th draw is a pure function of
/// (key, k). Child streams are derived with split(), so parallel shards
/// never share state and results do not depend on evaluation order.
class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t key) : key_(mix64(key)) {}

  constexpr CounterRng split(std::uint64_t stream) const {
    return CounterRng(key_ ^ mix64(stream + 0x632be59bd9b4e019ULL), 0);
  }

  constexpr std::uint64_t bits(std::uint64_t counter) const {
    return mix64(key_ ^ mix64(counter));
  }

  /// Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform(std::uint64_t counter) const {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  constexpr double uniform(std::uint64_t counter, double lo, double hi) const {
    return lo + (hi - lo) * uniform(counter);
  }

  std::uint64_t key() const { return key_; }

 private:
  constexpr CounterRng(std::uint64_t raw_key, int) : key_(raw_key) {}
  std::uint64_t key_;
};

}  // namespace hjprox
