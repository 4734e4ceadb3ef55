#pragma once

#include <cmath>
#include <cstdint>

namespace rehand {

// Deterministic RNG used everywhere in the library. We deliberately avoid
// <random> engines/distributions: distribution output is implementation
// defined, and every byte the pipeline produces must be reproducible across
// standard libraries. The generator is the splitmix64 sequence; derived
// streams are obtained by hashing a seed with stream tags.
//
// Draw contracts (tests replay these independently, keep them stable):
//   next_u64():   splitmix64 step
//   uniform01():  next_u64() >> 11, times 2^-53  -> [0,1)
//   uniform(a,b): a + (b-a)*uniform01()
//   normal():     Box-Muller on two uniform01 draws (no caching)
//   below(n):     unbiased rejection sampling on next_u64()

inline uint64_t splitmix64_next(uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Hash-combine used to derive independent streams from (seed, tags...).
inline uint64_t seed_mix(uint64_t a, uint64_t b) {
  uint64_t s = a ^ (b + 0x9E3779B97F4A7C15ull + (a << 6) + (a >> 2));
  return splitmix64_next(s);
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  static Rng derive(uint64_t seed, uint64_t tag) { return Rng(seed_mix(seed, tag)); }
  static Rng derive(uint64_t seed, uint64_t tag_a, uint64_t tag_b) {
    return Rng(seed_mix(seed_mix(seed, tag_a), tag_b));
  }
  static Rng derive(uint64_t seed, uint64_t tag_a, uint64_t tag_b, uint64_t tag_c) {
    return Rng(seed_mix(seed_mix(seed_mix(seed, tag_a), tag_b), tag_c));
  }

  uint64_t next_u64() { return splitmix64_next(state_); }

  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  double normal() {
    double u1 = uniform01();
    double u2 = uniform01();
    if (u1 <= 0.0) u1 = 0x1.0p-53;  // uniform01 can return exactly 0
    double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(2.0 * M_PI * u2);
  }

  // Uniform integer in [0, n). Rejection keeps it exactly uniform.
  uint64_t below(uint64_t n) {
    if (n == 0) return 0;
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % n;
  }

  Rng fork(uint64_t tag) { return Rng(seed_mix(next_u64(), tag)); }

 private:
  uint64_t state_;
};

}  // namespace rehand
