#pragma once

#include <cstdint>

namespace sphfit {

// Counter-free xoshiro256** generator with splitmix64 seeding.  The standard
// library distributions are implementation-defined, so everything that has to
// reproduce byte-for-byte across platforms goes through this class instead.
class Rng {
public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53 random mantissa bits.
  double uniform01();

  // Uniform in [lo, hi).
  double uniform(double lo, double hi);

  // Standard normal via Box-Muller (one spare value is cached).
  double normal();

  // +1 or -1 with equal probability.
  double sign();

private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stable 64-bit mix used to derive independent substreams from a master seed
// and a handful of integer tags (size, trial index, purpose, ...).
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a = 0,
                          std::uint64_t b = 0, std::uint64_t c = 0);

} // namespace sphfit
