#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "manetsim/types.hpp"

namespace manetsim {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// FNV-1a over the label bytes, folded with the master seed. Reordering
/// draws on one stream can never perturb another stream's sequence.
inline std::uint64_t derive_stream_seed(std::uint64_t master, std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return splitmix64(h ^ splitmix64(master));
}

}  // namespace detail

/// A named pseudo-random stream. Identical (seed, label) pairs produce
/// identical draw sequences on every platform; raw mt19937_64 output is
/// mapped to doubles directly so no implementation-defined distribution
/// code is involved.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::string_view label)
      : gen_(detail::derive_stream_seed(master_seed, label)) {}

  /// Uniform draw in [lo, hi); returns lo when lo == hi.
  double uniform(double lo, double hi) {
    if (lo > hi) throw InvalidRange("uniform: lo > hi");
    if (lo == hi) return lo;
    const double u = next_unit();
    double v = lo + u * (hi - lo);
    if (v >= hi) v = std::nextafter(hi, lo);
    return v;
  }

  /// Uniform integer in [0, n); n must be positive. Rejection sampling
  /// keeps the result unbiased and platform-stable.
  std::uint64_t uniform_u64(std::uint64_t n) {
    if (n == 0) throw InvalidRange("uniform_u64: n == 0");
    const std::uint64_t bound = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= bound);
    return x % n;
  }

  /// True with probability p. p <= 0 never fires, p >= 1 always fires;
  /// exactly one draw is consumed either way.
  bool chance(double p) { return next_unit() < p; }

 private:
  double next_unit() {
    // 53 uniform bits -> [0, 1)
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  std::mt19937_64 gen_;
};

}  // namespace manetsim
